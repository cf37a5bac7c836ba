#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddc/numkernel.hpp"

namespace ddc::lmi {

struct VarHandle {
  int id = -1;
};

// Affine matrix expression: constant + sum of coef * L * op(V) * R terms,
// with absent L/R meaning identity.
struct Term {
  int var = -1;
  std::optional<Mat> left;
  std::optional<Mat> right;
  bool transpose_var = false;
  double coef = 1.0;
};

struct Expr {
  int rows = 0;
  int cols = 0;
  Mat constant;  // rows x cols
  std::vector<Term> terms;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(double s, const Expr& e);
Expr operator*(const Mat& L, const Expr& e);
Expr operator*(const Expr& e, const Mat& R);
Expr transpose(const Expr& e);
Expr sym(const Expr& e);  // 0.5 (E + E^T)
Expr embed(const Expr& e, int total_rows, int total_cols, int r0, int c0);
Expr block2x2(const Expr& a, const Expr& b, const Expr& c, const Expr& d);

class SdpProblem {
 public:
  VarHandle add_variable(const std::string& name, int rows, int cols);
  Expr var(VarHandle h) const;
  static Expr constant(const Mat& C);

  void add_equality(const Expr& lhs, const Mat& rhs);
  void add_psd_block(const Expr& e);  // stored symmetrized

  struct VarInfo {
    std::string name;
    int rows = 0, cols = 0;
    int offset = 0;  // into the stacked unknown vector
  };
  const std::vector<VarInfo>& variables() const { return vars_; }
  const std::vector<std::pair<Expr, Mat>>& equalities() const { return equalities_; }
  const std::vector<Expr>& psd_blocks() const { return blocks_; }
  int total_unknowns() const { return total_; }

  Mat eval(const Expr& e, const std::vector<Mat>& assignment) const;

 private:
  std::vector<VarInfo> vars_;
  std::vector<std::pair<Expr, Mat>> equalities_;
  std::vector<Expr> blocks_;
  int total_ = 0;
};

enum class Status { feasible, infeasible, inconclusive };

struct SolveOptions {
  double eq_tol = 1e-6;
  double psd_tol = 1e-7;
  bool maximize_margin = false;  // push the smallest block margin up
  int max_iters = 4000;          // projected-gradient budget per target level
  int margin_rounds = 24;        // doubling + bisection steps for the objective
};

struct SdpSolution {
  Status status = Status::inconclusive;
  std::map<std::string, Mat> assignment;
  double eq_residual = 0.0;              // max-abs over all equality entries
  double psd_margin = 0.0;               // min over blocks of lambda_min
  std::vector<double> block_margins;
  long iterations = 0;
  std::string note;
};

SdpSolution solve_feasibility(const SdpProblem& p, const SolveOptions& opt = {},
                              const std::map<std::string, Mat>* warm_start = nullptr);

// Independent plug-back check: re-evaluates every equality and block from the
// problem description with the hand-rolled kernels rather than the solver's
// evaluation path.
bool verify_solution(const SdpProblem& p, const SdpSolution& sol, double eq_tol,
                     double psd_tol, double* eq_residual = nullptr,
                     double* psd_margin = nullptr);

// Debug dump: variable table, equality shapes, block expression trees.
std::string dump_problem(const SdpProblem& p);

}  // namespace ddc::lmi
