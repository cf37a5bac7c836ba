#include "ddc/synth.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ddc/errors.hpp"
#include "ddc/identify.hpp"
#include "ddc/precond.hpp"
#include "ddc/rng.hpp"

namespace ddc {

namespace {

// One synthesis problem: masked data blocks, effective shifted matrix, and a
// scoring estimate [Be Ae] identified from the same data.
struct ModeProblem {
  Mat U_sel;   // m x T
  Mat X_sel;   // n x T
  Mat X1_eff;  // n x T
  Mat Be, Ae;
  double radius = 0.0;
};

struct Candidate {
  Mat Q;
  double gain_norm = 0.0;
  double est_norm = 0.0;  // ||X1_eff Q||
  double score = 0.0;     // ||Ae + Be K||, the estimated closed loop
};

// Equality-constrained ridge family: minimize ||X1_eff Q||_F^2
// + rho ||U Q||_F^2 + mu ||Q||_F^2 subject to X_sel Q = I, swept over
// regularization weights; plus the plain minimum-norm solution.
std::vector<Candidate> make_candidates(const ModeProblem& mp, double K_bar) {
  const int T = static_cast<int>(mp.X_sel.cols());
  const int n = static_cast<int>(mp.X_sel.rows());
  const Mat gram_x1 = mp.X1_eff.transpose() * mp.X1_eff;
  const Mat gram_u = mp.U_sel.transpose() * mp.U_sel;
  std::vector<Mat> qs;
  for (double rho : {0.0, 0.01, 0.1}) {
    for (double mu : {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
      Mat H = gram_x1 + mu * Mat::Identity(T, T);
      if (rho > 0) H += rho * gram_u;
      Eigen::LDLT<Mat> ldlt(H);
      if (ldlt.info() != Eigen::Success) continue;
      const Mat HX = ldlt.solve(mp.X_sel.transpose());  // T x n
      const Mat S = mp.X_sel * HX;                      // n x n
      Eigen::LDLT<Mat> sldlt(S);
      if (sldlt.info() != Eigen::Success) continue;
      const Mat Q = HX * sldlt.solve(Mat::Identity(n, n));
      if (!Q.allFinite()) continue;
      qs.push_back(Q);
    }
  }
  qs.push_back(right_pseudo_inverse(mp.X_sel));
  std::vector<Candidate> out;
  for (Mat& Q : qs) {
    Candidate c;
    c.gain_norm = matrix_norm(mp.U_sel * Q, NormKind::spectral);
    if (c.gain_norm > K_bar) continue;
    c.est_norm = matrix_norm(mp.X1_eff * Q, NormKind::spectral);
    c.score = matrix_norm(mp.Ae + mp.Be * (mp.U_sel * Q), NormKind::spectral);
    c.Q = std::move(Q);
    out.push_back(std::move(c));
  }
  return out;
}

struct ModeOutcome {
  bool feasible = false;
  ModeCertificate cert;
  Mat gain;
  std::string why;
};

ModeOutcome solve_mode(const ModeProblem& mp, const SynthesisConfig& cfg,
                       std::optional<double> abs_bound) {
  ModeOutcome out;
  const int T = static_cast<int>(mp.X_sel.cols());
  const int n = static_cast<int>(mp.X_sel.rows());
  const int m = static_cast<int>(mp.U_sel.rows());
  const double eta = cfg.margin_eta;

  std::vector<double> grid = cfg.lambda_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto cands = make_candidates(mp, cfg.K_bar);
  if (cands.empty()) {
    out.why = "no gain within ||K|| <= " + std::to_string(cfg.K_bar);
    return out;
  }
  const Candidate& best =
      *std::min_element(cands.begin(), cands.end(),
                        [](const Candidate& a, const Candidate& b) { return a.score < b.score; });

  for (double lambda : grid) {
    if (lambda * mp.radius > 1.0 - eta) continue;  // filtered grid point
    const double cap = (1.0 - eta) * (1.0 - lambda * mp.radius);
    Mat delta_q = Mat::Zero(n, n);
    bool absorbed = false;
    if (best.est_norm > cap) {
      if (lambda >= 1.0) continue;  // the DeltaQ coefficient vanishes at 1
      // fold the overshoot into the free DeltaQ variable
      const double theta = 1.0 - cap * (1.0 - 1e-9) / best.est_norm;
      delta_q = -(theta / (1.0 - lambda)) * (mp.X1_eff * best.Q);
      absorbed = true;
    }

    // literal feasibility system for this grid point
    lmi::SdpProblem prob;
    const auto qv = prob.add_variable("Q", T, n);
    lmi::VarHandle dqv;
    if (lambda < 1.0) dqv = prob.add_variable("DeltaQ", n, n);
    prob.add_equality(mp.X_sel * prob.var(qv), Mat::Identity(n, n));
    const auto gain_expr = mp.U_sel * prob.var(qv);
    prob.add_psd_block(lmi::block2x2(
        lmi::SdpProblem::constant(cfg.K_bar * Mat::Identity(m, m)), gain_expr,
        lmi::transpose(gain_expr), lmi::SdpProblem::constant(cfg.K_bar * Mat::Identity(n, n))));
    auto contraction_expr = mp.X1_eff * prob.var(qv);
    if (lambda < 1.0) {
      contraction_expr = contraction_expr + (1.0 - lambda) * prob.var(dqv);
    }
    const Mat diag = cap * Mat::Identity(n, n);
    prob.add_psd_block(lmi::block2x2(lmi::SdpProblem::constant(diag), contraction_expr,
                                     lmi::transpose(contraction_expr),
                                     lmi::SdpProblem::constant(diag)));

    std::map<std::string, Mat> warm{{"Q", best.Q}};
    if (lambda < 1.0) warm["DeltaQ"] = delta_q;
    lmi::SolveOptions opt;
    opt.max_iters = 300;
    const auto sol = lmi::solve_feasibility(prob, opt, &warm);
    if (sol.status != lmi::Status::feasible) continue;

    double ver_eq = 0.0, ver_margin = 0.0;
    const bool ok = lmi::verify_solution(prob, sol, opt.eq_tol, opt.psd_tol, &ver_eq, &ver_margin);
    if (!ok) continue;

    out.feasible = true;
    out.gain = mp.U_sel * sol.assignment.at("Q");
    ModeCertificate& c = out.cert;
    c.lambda = lambda;
    c.Q = sol.assignment.at("Q");
    c.DeltaQ = lambda < 1.0 ? sol.assignment.at("DeltaQ") : Mat::Zero(n, n);
    c.delta_absorbed = absorbed;
    c.est_closed_loop_norm = matrix_norm(mp.X1_eff * c.Q, NormKind::spectral);
    c.gain_norm = matrix_norm(out.gain, NormKind::spectral);
    c.eq_residual = ver_eq;
    c.margin_gain_block = sol.block_margins.at(0);
    c.margin_contraction_block = sol.block_margins.at(1);
    c.reverified = true;
    if (lambda >= 1.0 && abs_bound) {
      // direct robust chain: estimated contraction plus the worst model error
      const double kick = *abs_bound * std::sqrt(c.gain_norm * c.gain_norm + 1.0);
      c.certified_lambda1 = c.est_closed_loop_norm + kick < 1.0;
    }
    return out;
  }
  std::ostringstream why;
  why << "no admissible lambda in the grid (radius " << mp.radius << ", best ||X1 Q|| "
      << best.est_norm << ")";
  out.why = why.str();
  return out;
}

void require_radius(const ErrorBudget& b, const std::string& who) {
  if (!b.radius_DX1) {
    throw AssumptionViolation(
        who + ": uncertainty radius unavailable (c_bar = " + std::to_string(b.c_bar) +
        " >= 1); pre-condition the data matrix to tighten the bound");
  }
}

}  // namespace

SynthesisResult synthesize_lti(const DataMatrices& dm, const ErrorBudget& budget,
                               const SynthesisConfig& cfg) {
  const Richness rich = check_richness(stack_UX(dm.U0, dm.X0), dm.m() + dm.n());
  if (!rich.satisfied) {
    throw RankDeficient("synthesize_lti: data matrix fails the rank assumption",
                        rich.numerical_rank);
  }
  require_radius(budget, "synthesize_lti");

  ModeProblem mp;
  mp.U_sel = dm.U0;
  mp.X_sel = dm.X0;
  mp.X1_eff = dm.X1;
  const IdentifiedModel est = identify_lti(dm);
  mp.Be = est.B(0);
  mp.Ae = est.A(0);
  mp.radius = *budget.radius_DX1;

  SynthesisResult result;
  ModeOutcome mo = solve_mode(mp, cfg, budget.absolute_bound);
  if (mo.feasible) {
    result.feasible = true;
    result.gains.push_back(mo.gain);
    result.certificates.push_back(mo.cert);
    result.message = "feasible at lambda = " + std::to_string(mo.cert.lambda);
  } else {
    result.infeasible_modes.push_back(1);
    result.message = mo.why;
  }
  return result;
}

namespace {

// Column subset shared by all modes: per-mode quota through the selector with
// a deterministic stride fallback, then union.
std::vector<int> pick_subset(const DataMatrices& dm, const ModeMasked& masked,
                             const SynthesisConfig& cfg) {
  const int per_mode = std::max(dm.m() + dm.n(), cfg.subset_cols / std::max(1, masked.gamma));
  std::vector<int> chosen;
  for (int i = 0; i < masked.gamma; ++i) {
    const auto& nz = masked.nonzero_cols[i];
    const Mat sub = select_columns(stack_UX(masked.U[i], masked.X[i]), nz);
    std::vector<int> local;
    if (static_cast<int>(nz.size()) <= per_mode) {
      local.resize(nz.size());
      for (std::size_t k = 0; k < nz.size(); ++k) local[k] = static_cast<int>(k);
    } else {
      ColumnSelectInfo info;
      local = column_select(sub, per_mode, 50, cfg.subset_seed, &info);
      if (static_cast<int>(local.size()) > per_mode) {
        // selector kept everything: thin deterministically by stride
        std::vector<int> thin;
        const double stride = static_cast<double>(local.size()) / per_mode;
        for (int k = 0; k < per_mode; ++k)
          thin.push_back(local[static_cast<std::size_t>(k * stride)]);
        const Mat check = select_columns(sub, thin);
        if (check_richness(check, dm.m() + dm.n()).satisfied) local = thin;
      }
    }
    for (int k : local) chosen.push_back(nz[static_cast<std::size_t>(k)]);
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  return chosen;
}

}  // namespace

SynthesisResult synthesize_switched(const DataMatrices& dm_in, const ModeMasked& masked_in,
                                    const std::vector<ErrorBudget>& budgets,
                                    const SynthesisConfig& cfg) {
  if (static_cast<int>(budgets.size()) != masked_in.gamma) {
    throw InvalidInput("synthesize_switched: one budget per mode required");
  }

  SynthesisResult result;
  DataMatrices dm = dm_in;
  ModeMasked masked = masked_in;
  if (cfg.allow_column_subset && cfg.subset_cols < dm.T()) {
    const std::vector<int> cols = pick_subset(dm_in, masked_in, cfg);
    result.subset_columns = cols;
    dm.U0 = select_columns(dm_in.U0, cols);
    dm.X0 = select_columns(dm_in.X0, cols);
    dm.X1 = select_columns(dm_in.X1, cols);
    // rebuild masks on the reduced column set
    std::vector<int> modes(cols.size(), 0);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      for (int i = 0; i < masked_in.gamma; ++i) {
        const auto& nz = masked_in.nonzero_cols[i];
        if (std::binary_search(nz.begin(), nz.end(), cols[k])) {
          modes[k] = i + 1;
          break;
        }
      }
    }
    masked = build_mode_masked(dm, modes, masked_in.gamma);
  }

  const int gamma = masked.gamma;
  const int T = dm.T();
  std::vector<Mat> spinvs(gamma);
  std::vector<int> missing;
  for (int i = 0; i < gamma; ++i) {
    try {
      spinvs[i] = structured_pseudo_inverse(masked.U[i], masked.X[i], masked.nonzero_cols[i]);
    } catch (const RankDeficient&) {
      missing.push_back(i + 1);
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "synthesize_switched: per-mode rank assumption fails for mode(s)";
    for (int i : missing) msg << " " << i;
    throw RankDeficient(msg.str(), 0);
  }
  for (int i = 0; i < gamma; ++i) {
    require_radius(budgets[static_cast<std::size_t>(i)],
                   "synthesize_switched mode " + std::to_string(i + 1));
  }

  std::vector<Mat> mode_stacked(gamma);
  for (int i = 0; i < gamma; ++i) mode_stacked[i] = stack_UX(masked.U[i], masked.X[i]);

  std::vector<ModeOutcome> outcomes(gamma);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < gamma; ++i) {
    // Pi_i = I - sum_{j != i} M_j^+ M_j
    Mat Pi = Mat::Identity(T, T);
    for (int j = 0; j < gamma; ++j) {
      if (j == i) continue;
      Pi -= kernels::matmul(spinvs[j], mode_stacked[j]);
    }
    ModeProblem mp;
    mp.U_sel = masked.U[i];
    mp.X_sel = masked.X[i];
    mp.X1_eff = kernels::matmul(dm.X1, Pi);
    const Mat block = dm.X1 * spinvs[i];
    mp.Be = block.leftCols(dm.m());
    mp.Ae = block.rightCols(dm.n());
    mp.radius = *budgets[static_cast<std::size_t>(i)].radius_DX1;
    outcomes[i] = solve_mode(mp, cfg, budgets[static_cast<std::size_t>(i)].absolute_bound);
  }

  result.feasible = true;
  std::ostringstream msg;
  for (int i = 0; i < gamma; ++i) {
    if (outcomes[i].feasible) {
      result.gains.push_back(outcomes[i].gain);
      result.certificates.push_back(outcomes[i].cert);
    } else {
      result.feasible = false;
      result.infeasible_modes.push_back(i + 1);
      msg << "mode " << (i + 1) << ": " << outcomes[i].why << "; ";
    }
  }
  result.message = result.feasible ? "feasible for all modes" : msg.str();
  if (!result.feasible) {
    result.gains.clear();
    result.certificates.clear();
  }
  return result;
}

ClosedLoopReport verify_closed_loop(const SwitchedModel& model,
                                    const std::vector<Mat>& gains, const Vec& x0,
                                    int steps, std::uint64_t seed) {
  if (static_cast<int>(gains.size()) != model.gamma()) {
    throw InvalidInput("verify_closed_loop: one gain per mode required");
  }
  static constexpr std::uint64_t kStream = rng::stream_tag("closed-loop-switching");
  ClosedLoopReport rep;
  std::vector<Mat> closed;
  for (int i = 0; i < model.gamma(); ++i) {
    const Mat cl = model.modes[static_cast<std::size_t>(i)].A +
                   model.modes[static_cast<std::size_t>(i)].B * gains[static_cast<std::size_t>(i)];
    closed.push_back(cl);
    rep.spectral_radii.push_back(spectral_radius(cl));
    rep.spectral_norms.push_back(matrix_norm(cl, NormKind::spectral));
  }
  const double x0n = x0.norm();
  Mat traj(model.n(), steps + 1);
  traj.col(0) = x0;
  Vec x = x0;
  int simulated = steps;
  for (int k = 0; k < steps; ++k) {
    const int s = rng::uniform_int(seed, kStream, static_cast<std::uint64_t>(k), 1, model.gamma());
    x = closed[static_cast<std::size_t>(s - 1)] * x;
    traj.col(k + 1) = x;
    if (rep.first_passage < 0 && x.norm() <= 1e-3 * x0n) rep.first_passage = k + 1;
    if (x.norm() > 1e9 * std::max(1.0, x0n)) {
      simulated = k + 1;
      break;
    }
  }
  rep.trajectory = traj.leftCols(simulated + 1);
  rep.converged = simulated == steps && x.norm() <= 1e-3 * x0n;
  return rep;
}

std::string to_json(const SynthesisResult& result) {
  nlohmann::json j;
  j["feasible"] = result.feasible;
  j["message"] = result.message;
  j["infeasible_modes"] = result.infeasible_modes;
  auto& gains = j["gains"] = nlohmann::json::array();
  for (const Mat& K : result.gains) {
    std::vector<double> row_major;
    for (Eigen::Index r = 0; r < K.rows(); ++r)
      for (Eigen::Index c = 0; c < K.cols(); ++c) row_major.push_back(K(r, c));
    nlohmann::json g;
    g["rows"] = K.rows();
    g["cols"] = K.cols();
    g["row_major"] = row_major;
    gains.push_back(g);
  }
  auto& certs = j["certificates"] = nlohmann::json::array();
  for (const auto& c : result.certificates) {
    nlohmann::json cj;
    cj["lambda"] = c.lambda;
    cj["delta_absorbed"] = c.delta_absorbed;
    cj["certified_lambda1"] = c.certified_lambda1;
    cj["est_closed_loop_norm"] = c.est_closed_loop_norm;
    cj["gain_norm"] = c.gain_norm;
    cj["eq_residual"] = c.eq_residual;
    cj["margin_gain_block"] = c.margin_gain_block;
    cj["margin_contraction_block"] = c.margin_contraction_block;
    cj["reverified"] = c.reverified;
    certs.push_back(cj);
  }
  if (!result.subset_columns.empty()) j["subset_columns"] = result.subset_columns;
  return j.dump(2);
}

}  // namespace ddc
