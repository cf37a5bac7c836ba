#include "ddc/lmi.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddc/errors.hpp"
#include "ddc/rng.hpp"

namespace ddc::lmi {

namespace {

void require_shape(const Expr& a, const Expr& b, const char* who) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw BuildError(std::string(who) + ": expression shapes " + std::to_string(a.rows) +
                     "x" + std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                     std::to_string(b.cols));
  }
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  require_shape(a, b, "expr add");
  Expr out = a;
  out.constant += b.constant;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

Expr operator-(const Expr& a, const Expr& b) {
  return a + (-1.0 * b);
}

Expr operator*(double s, const Expr& e) {
  Expr out = e;
  out.constant *= s;
  for (auto& t : out.terms) t.coef *= s;
  return out;
}

Expr operator*(const Mat& L, const Expr& e) {
  if (L.cols() != e.rows) throw BuildError("expr lmul: inner dimensions differ");
  Expr out;
  out.rows = static_cast<int>(L.rows());
  out.cols = e.cols;
  out.constant = L * e.constant;
  for (const auto& t : e.terms) {
    Term nt = t;
    nt.left = t.left ? Mat(L * *t.left) : L;
    out.terms.push_back(std::move(nt));
  }
  return out;
}

Expr operator*(const Expr& e, const Mat& R) {
  if (e.cols != R.rows()) throw BuildError("expr rmul: inner dimensions differ");
  Expr out;
  out.rows = e.rows;
  out.cols = static_cast<int>(R.cols());
  out.constant = e.constant * R;
  for (const auto& t : e.terms) {
    Term nt = t;
    nt.right = t.right ? Mat(*t.right * R) : R;
    out.terms.push_back(std::move(nt));
  }
  return out;
}

Expr transpose(const Expr& e) {
  Expr out;
  out.rows = e.cols;
  out.cols = e.rows;
  out.constant = e.constant.transpose();
  for (const auto& t : e.terms) {
    Term nt;
    nt.var = t.var;
    nt.coef = t.coef;
    nt.transpose_var = !t.transpose_var;
    if (t.right) nt.left = Mat(t.right->transpose());
    if (t.left) nt.right = Mat(t.left->transpose());
    out.terms.push_back(std::move(nt));
  }
  return out;
}

Expr sym(const Expr& e) {
  if (e.rows != e.cols) throw BuildError("sym: expression is not square");
  return 0.5 * (e + transpose(e));
}

Expr embed(const Expr& e, int total_rows, int total_cols, int r0, int c0) {
  if (r0 < 0 || c0 < 0 || r0 + e.rows > total_rows || c0 + e.cols > total_cols) {
    throw BuildError("embed: block does not fit");
  }
  Mat Sr = Mat::Zero(total_rows, e.rows);
  for (int i = 0; i < e.rows; ++i) Sr(r0 + i, i) = 1.0;
  Mat Sc = Mat::Zero(e.cols, total_cols);
  for (int j = 0; j < e.cols; ++j) Sc(j, c0 + j) = 1.0;
  return Sr * e * Sc;
}

Expr block2x2(const Expr& a, const Expr& b, const Expr& c, const Expr& d) {
  if (a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols) {
    throw BuildError("block2x2: inconsistent block shapes");
  }
  const int tr = a.rows + c.rows;
  const int tc = a.cols + b.cols;
  return embed(a, tr, tc, 0, 0) + embed(b, tr, tc, 0, a.cols) +
         embed(c, tr, tc, a.rows, 0) + embed(d, tr, tc, a.rows, a.cols);
}

VarHandle SdpProblem::add_variable(const std::string& name, int rows, int cols) {
  if (rows < 1 || cols < 1) throw BuildError("add_variable: empty shape for " + name);
  for (const auto& v : vars_) {
    if (v.name == name) throw BuildError("add_variable: duplicate name " + name);
  }
  VarInfo info;
  info.name = name;
  info.rows = rows;
  info.cols = cols;
  info.offset = total_;
  vars_.push_back(info);
  total_ += rows * cols;
  return VarHandle{static_cast<int>(vars_.size()) - 1};
}

Expr SdpProblem::var(VarHandle h) const {
  if (h.id < 0 || h.id >= static_cast<int>(vars_.size())) {
    throw BuildError("var: handle refers to an undeclared variable");
  }
  Expr e;
  e.rows = vars_[h.id].rows;
  e.cols = vars_[h.id].cols;
  e.constant = Mat::Zero(e.rows, e.cols);
  Term t;
  t.var = h.id;
  e.terms.push_back(t);
  return e;
}

Expr SdpProblem::constant(const Mat& C) {
  Expr e;
  e.rows = static_cast<int>(C.rows());
  e.cols = static_cast<int>(C.cols());
  e.constant = C;
  return e;
}

void SdpProblem::add_equality(const Expr& lhs, const Mat& rhs) {
  if (lhs.rows != rhs.rows() || lhs.cols != rhs.cols()) {
    throw BuildError("add_equality: lhs and rhs shapes differ");
  }
  for (const auto& t : lhs.terms) {
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size())) {
      throw BuildError("add_equality: term references an undeclared variable");
    }
  }
  equalities_.emplace_back(lhs, rhs);
}

void SdpProblem::add_psd_block(const Expr& e) {
  for (const auto& t : e.terms) {
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size())) {
      throw BuildError("add_psd_block: term references an undeclared variable");
    }
  }
  blocks_.push_back(sym(e));
}

Mat SdpProblem::eval(const Expr& e, const std::vector<Mat>& assignment) const {
  Mat out = e.constant;
  for (const auto& t : e.terms) {
    const Mat& V = assignment.at(static_cast<std::size_t>(t.var));
    Mat piece = t.transpose_var ? Mat(V.transpose()) : V;
    if (t.left) piece = *t.left * piece;
    if (t.right) piece = piece * *t.right;
    out += t.coef * piece;
  }
  return out;
}

namespace {

// gradient accumulation of <W, term> into per-variable slots
void accumulate_adjoint(const Expr& e, const Mat& W, std::vector<Mat>& grad) {
    for (const auto& t : e.terms) {
      Mat contrib;
      if (!t.transpose_var) {
        // d/dV tr(W^T L V R) = L^T W R^T
        Mat tmp = t.left ? Mat(t.left->transpose() * W) : W;
        contrib = t.right ? Mat(tmp * t.right->transpose()) : tmp;
      } else {
        // d/dV tr(W^T L V^T R) = R W^T L
        Mat tmp = t.right ? Mat(*t.right * W.transpose()) : Mat(W.transpose());
        contrib = t.left ? Mat(tmp * *t.left) : tmp;
      }
      grad[static_cast<std::size_t>(t.var)] += t.coef * contrib;
    }
}

double dot(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

void axpy(double alpha, const std::vector<Mat>& x, std::vector<Mat>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

std::vector<Mat> zeros_like(const SdpProblem& p) {
  std::vector<Mat> out;
  for (const auto& v : p.variables()) out.push_back(Mat::Zero(v.rows, v.cols));
  return out;
}

// Equality subsystem: residual stacking, Gram pseudo-inverse, projections.
class EqualitySystem {
 public:
  explicit EqualitySystem(const SdpProblem& p) : p_(p) {
    count_ = 0;
    for (const auto& [lhs, rhs] : p.equalities()) {
      count_ += static_cast<int>(rhs.size());
    }
    const auto zero = zeros_like(p);
    b_.resize(count_);
    int at = 0;
    for (const auto& [lhs, rhs] : p.equalities()) {
      const Mat c0 = p.eval(lhs, zero);
      const Mat diff = rhs - c0;
      for (Eigen::Index j = 0; j < diff.cols(); ++j)
        for (Eigen::Index i = 0; i < diff.rows(); ++i) b_(at++) = diff(i, j);
    }
    build_gram();
  }

  int count() const { return count_; }
  bool consistent() const { return consistent_; }
  double inconsistency() const { return inconsistency_; }
  bool pins_everything() const { return rank_ == p_.total_unknowns(); }

  Vec forward_linear(const std::vector<Mat>& x) const {
    Vec out(count_);
    int at = 0;
    const auto zero = zeros_like(p_);
    for (const auto& [lhs, rhs] : p_.equalities()) {
      Mat v = p_.eval(lhs, x) - p_.eval(lhs, zero);
      for (Eigen::Index j = 0; j < v.cols(); ++j)
        for (Eigen::Index i = 0; i < v.rows(); ++i) out(at++) = v(i, j);
    }
    return out;
  }

  std::vector<Mat> adjoint(const Vec& e) const {
    auto grad = zeros_like(p_);
    int at = 0;
    for (const auto& [lhs, rhs] : p_.equalities()) {
      Mat W(rhs.rows(), rhs.cols());
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = e(at++);
      accumulate_adjoint(lhs, W, grad);
    }
    return grad;
  }

  // x <- x - M^T G^+ (M x - b); exact projection onto the affine set
  void project(std::vector<Mat>& x) const {
    if (count_ == 0) return;
    const Vec r = forward_linear(x) - b_;
    const Vec y = gram_pinv_apply(r);
    auto corr = adjoint(y);
    axpy(-1.0, corr, x);
  }

  // min-norm solution of the equalities
  std::vector<Mat> min_norm_solution() const {
    auto x = zeros_like(p_);
    if (count_ == 0) return x;
    const Vec y = gram_pinv_apply(b_);
    auto out = adjoint(y);
    return out;
  }

  double residual_inf(const std::vector<Mat>& x) const {
    if (count_ == 0) return 0.0;
    return (forward_linear(x) - b_).cwiseAbs().maxCoeff();
  }

 private:
  void build_gram() {
    if (count_ == 0) {
      consistent_ = true;
      return;
    }
    Mat G(count_, count_);
    for (int c = 0; c < count_; ++c) {
      Vec e = Vec::Zero(count_);
      e(c) = 1.0;
      G.col(c) = forward_linear(adjoint(e));
    }
    es_.compute(0.5 * (G + G.transpose()));
    const Vec lam = es_.eigenvalues();
    const double tol = std::max(1e-14, lam.cwiseAbs().maxCoeff() * count_ * 1e-14);
    inv_lam_ = lam;
    rank_ = 0;
    for (int i = 0; i < count_; ++i) {
      if (lam(i) > tol) {
        inv_lam_(i) = 1.0 / lam(i);
        ++rank_;
      } else {
        inv_lam_(i) = 0.0;
      }
    }
    // rank of the Gram equals rank of the equality map
    auto x0 = adjoint(gram_pinv_apply(b_));
    inconsistency_ = (forward_linear(x0) - b_).cwiseAbs().maxCoeff();
    consistent_ = true;  // judged against eq_tol by the caller
  }

  Vec gram_pinv_apply(const Vec& r) const {
    return es_.eigenvectors() * (inv_lam_.asDiagonal() * (es_.eigenvectors().transpose() * r));
  }

  const SdpProblem& p_;
  int count_ = 0;
  int rank_ = 0;
  Vec b_;
  Eigen::SelfAdjointEigenSolver<Mat> es_;
  Vec inv_lam_;
  bool consistent_ = false;
  double inconsistency_ = 0.0;
};

struct MarginEval {
  double margin = 0.0;
  std::vector<double> per_block;
};

MarginEval eval_margins(const SdpProblem& p, const std::vector<Mat>& x) {
  MarginEval me;
  me.margin = std::numeric_limits<double>::infinity();
  for (const auto& blk : p.psd_blocks()) {
    const Mat S = p.eval(blk, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    const double m = es.eigenvalues().minCoeff();
    me.per_block.push_back(m);
    me.margin = std::min(me.margin, m);
  }
  if (p.psd_blocks().empty()) me.margin = 0.0;
  return me;
}

// 0.5 * sum_k || (S_k(x) - t I)_- ||_F^2 and its gradient (projected later)
double dist_and_grad(const SdpProblem& p, const std::vector<Mat>& x, double t,
                     std::vector<Mat>& grad) {
  for (auto& g : grad) g.setZero();
  double val = 0.0;
  for (const auto& blk : p.psd_blocks()) {
    const Mat S = p.eval(blk, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
    const Vec lam = es.eigenvalues();
    Mat R = Mat::Zero(S.rows(), S.cols());
    bool any = false;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i) < t) {
        R += (lam(i) - t) * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
        any = true;
      }
    }
    if (!any) continue;
    val += 0.5 * R.squaredNorm();
    accumulate_adjoint(blk, R, grad);
  }
  return val;
}

// Projected gradient descent on the squared distance to the margin-t cone
// intersection; returns true when every block clears t - slack.
bool descend_to_level(const SdpProblem& p, const EqualitySystem& eq, std::vector<Mat>& x,
                      double t, double slack, int max_iters, long& iter_count) {
  auto grad = zeros_like(p);
  auto prev_x = x;
  auto prev_grad = zeros_like(p);
  double step = 0.0;
  bool have_prev = false;

  for (int it = 0; it < max_iters; ++it) {
    ++iter_count;
    const double val = dist_and_grad(p, x, t, grad);
    if (val == 0.0) return true;
    // project the gradient onto the equality null space through a probe point
    auto probe = x;
    axpy(-1.0, grad, probe);
    eq.project(probe);
    auto pgrad = x;
    axpy(-1.0, probe, pgrad);  // pgrad = x - probe = projected gradient
    const double gnorm2 = dot(pgrad, pgrad);
    if (gnorm2 <= 1e-30) {
      return eval_margins(p, x).margin >= t - slack;
    }
    if (have_prev) {
      auto dx = x;
      axpy(-1.0, prev_x, dx);
      auto dg = pgrad;
      axpy(-1.0, prev_grad, dg);
      const double dgg = dot(dg, dg);
      step = dgg > 0 ? std::abs(dot(dx, dg)) / dgg : step;
    } else {
      step = val / gnorm2;  // first step from the Cauchy estimate
    }
    step = std::clamp(step, 1e-12, 1e12);
    prev_x = x;
    prev_grad = pgrad;
    have_prev = true;
    axpy(-step, pgrad, x);
    eq.project(x);
    if (eval_margins(p, x).margin >= t - slack) return true;
  }
  return eval_margins(p, x).margin >= t - slack;
}

}  // namespace

SdpSolution solve_feasibility(const SdpProblem& p, const SolveOptions& opt,
                              const std::map<std::string, Mat>* warm_start) {
  SdpSolution sol;
  EqualitySystem eq(p);

  // assemble starting point
  std::vector<Mat> x;
  if (warm_start) {
    x = zeros_like(p);
    for (std::size_t i = 0; i < p.variables().size(); ++i) {
      const auto it = warm_start->find(p.variables()[i].name);
      if (it != warm_start->end()) {
        if (it->second.rows() != x[i].rows() || it->second.cols() != x[i].cols()) {
          throw BuildError("warm start shape mismatch for " + p.variables()[i].name);
        }
        x[i] = it->second;
      }
    }
    eq.project(x);
  } else {
    x = eq.min_norm_solution();
  }

  if (eq.inconsistency() > opt.eq_tol) {
    sol.status = Status::infeasible;
    sol.note = "equalities are inconsistent (least-squares residual " +
               std::to_string(eq.inconsistency()) + ")";
    sol.eq_residual = eq.inconsistency();
    return sol;
  }

  long iters = 0;
  const double slack = 0.5 * opt.psd_tol;
  bool ok = descend_to_level(p, eq, x, 0.0, slack, opt.max_iters, iters);
  MarginEval me = eval_margins(p, x);

  if (ok && opt.maximize_margin && !p.psd_blocks().empty()) {
    // doubling then bisection on the margin level, warm-starting each level
    double lo = me.margin;
    double hi_fail = -1.0;
    double scale = std::max(1.0, std::abs(lo));
    auto best = x;
    for (int round = 0; round < opt.margin_rounds; ++round) {
      double t;
      if (hi_fail < 0) {
        t = lo > 0 ? 2.0 * lo + 0.1 * scale : lo + 0.5 * scale;
      } else {
        if (hi_fail - lo <= 1e-4 * scale) break;
        t = 0.5 * (lo + hi_fail);
      }
      auto trial = best;
      const bool got = descend_to_level(p, eq, trial, t, slack, opt.max_iters, iters);
      const MarginEval m2 = eval_margins(p, trial);
      if (got && m2.margin >= lo) {
        lo = m2.margin;
        best = trial;
      } else {
        hi_fail = t;
      }
    }
    x = best;
    me = eval_margins(p, x);
  }

  sol.eq_residual = eq.residual_inf(x);
  sol.psd_margin = me.margin;
  sol.block_margins = me.per_block;
  sol.iterations = iters;
  for (std::size_t i = 0; i < p.variables().size(); ++i) {
    sol.assignment[p.variables()[i].name] = x[i];
  }

  const bool eq_ok = sol.eq_residual <= opt.eq_tol;
  const bool psd_ok = sol.psd_margin >= -opt.psd_tol;
  if (eq_ok && psd_ok) {
    sol.status = Status::feasible;
  } else if (eq.pins_everything()) {
    // nothing left to optimize: the evaluation is the proof
    sol.status = Status::infeasible;
    sol.note = "equalities pin every unknown and the pinned point violates a block";
  } else {
    sol.status = Status::inconclusive;
    sol.note = "iteration cap reached before a feasible point was found";
  }
  return sol;
}

bool verify_solution(const SdpProblem& p, const SdpSolution& sol, double eq_tol,
                     double psd_tol, double* eq_residual, double* psd_margin) {
  // direct evaluation through the hand-rolled kernels
  std::vector<Mat> x;
  for (const auto& v : p.variables()) {
    const auto it = sol.assignment.find(v.name);
    if (it == sol.assignment.end()) return false;
    x.push_back(it->second);
  }
  auto eval_direct = [&](const Expr& e) {
    Mat out = e.constant;
    for (const auto& t : e.terms) {
      Mat piece = t.transpose_var ? Mat(x[static_cast<std::size_t>(t.var)].transpose())
                                  : x[static_cast<std::size_t>(t.var)];
      if (t.left) piece = kernels::matmul(*t.left, piece);
      if (t.right) piece = kernels::matmul(piece, *t.right);
      out += t.coef * piece;
    }
    return out;
  };
  double res = 0.0;
  for (const auto& [lhs, rhs] : p.equalities()) {
    const Mat diff = eval_direct(lhs) - rhs;
    res = std::max(res, diff.cwiseAbs().maxCoeff());
  }
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& blk : p.psd_blocks()) {
    margin = std::min(margin, min_eigenvalue_sym(eval_direct(blk)));
  }
  if (p.psd_blocks().empty()) margin = 0.0;
  if (eq_residual) *eq_residual = res;
  if (psd_margin) *psd_margin = margin;
  return res <= eq_tol && margin >= -psd_tol;
}

std::string dump_problem(const SdpProblem& p) {
  std::ostringstream os;
  os << "variables (" << p.variables().size() << "):\n";
  for (const auto& v : p.variables()) {
    os << "  " << v.name << " : " << v.rows << "x" << v.cols << " @" << v.offset << "\n";
  }
  auto dump_expr = [&](const Expr& e) {
    os << "const " << e.rows << "x" << e.cols;
    for (const auto& t : e.terms) {
      os << " + " << t.coef << "*";
      if (t.left) os << "[" << t.left->rows() << "x" << t.left->cols() << "]";
      os << p.variables()[static_cast<std::size_t>(t.var)].name << (t.transpose_var ? "^T" : "");
      if (t.right) os << "[" << t.right->rows() << "x" << t.right->cols() << "]";
    }
    os << "\n";
  };
  os << "equalities (" << p.equalities().size() << "):\n";
  for (const auto& [lhs, rhs] : p.equalities()) {
    os << "  ";
    dump_expr(lhs);
  }
  os << "psd blocks (" << p.psd_blocks().size() << "):\n";
  for (const auto& b : p.psd_blocks()) {
    os << "  ";
    dump_expr(b);
  }
  return os.str();
}

}  // namespace ddc::lmi
