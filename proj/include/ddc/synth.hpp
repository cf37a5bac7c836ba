#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddc/bounds.hpp"
#include "ddc/datamat.hpp"
#include "ddc/lmi.hpp"
#include "ddc/plant.hpp"

namespace ddc {

struct SynthesisConfig {
  double K_bar = 3.0;
  std::vector<double> lambda_grid = {1.0, 0.75, 0.5, 0.25, 0.1, 0.01};
  double margin_eta = 1e-3;  // strict-contraction margin
  bool allow_column_subset = false;
  int subset_cols = 150;
  std::uint64_t subset_seed = 0;
};

// Per-problem certificate (one per mode for switched synthesis).
struct ModeCertificate {
  double lambda = 0.0;
  Mat Q;        // T x n
  Mat DeltaQ;   // n x n; zero unless the off-diagonal was absorbed
  bool delta_absorbed = false;   // DeltaQ carries the contraction block
  bool certified_lambda1 = false;  // lambda = 1 with the direct robust check
  double est_closed_loop_norm = 0.0;  // ||X1_eff Q||
  double gain_norm = 0.0;             // ||U_sel Q||
  double eq_residual = 0.0;
  double margin_gain_block = 0.0;
  double margin_contraction_block = 0.0;
  bool reverified = false;
};

struct SynthesisResult {
  bool feasible = false;
  std::vector<Mat> gains;  // m x n per mode
  std::vector<ModeCertificate> certificates;
  std::vector<int> infeasible_modes;  // 1-based
  std::string message;
  std::vector<int> subset_columns;  // nonempty when a column subset was used
};

// Robust LTI gain via the lambda-grid feasibility sweep over
//   X0 Q = I,
//   [[Kbar I, U0 Q], [., Kbar I]] >= 0,
//   [[(1-eta)(1-lambda r) I, X1 Q + (1-lambda) DeltaQ], [., .]] >= 0.
// Requires budget.radius_DX1 (i.e. c_bar < 1).
SynthesisResult synthesize_lti(const DataMatrices& dm, const ErrorBudget& budget,
                               const SynthesisConfig& cfg);

// Per-mode problems with X1 replaced by X1 Pi_i,
// Pi_i = I - sum_{j != i} M_j^+ M_j, and per-mode radii.
SynthesisResult synthesize_switched(const DataMatrices& dm, const ModeMasked& masked,
                                    const std::vector<ErrorBudget>& budgets,
                                    const SynthesisConfig& cfg);

struct ClosedLoopReport {
  std::vector<double> spectral_radii;   // per mode, ground truth
  std::vector<double> spectral_norms;   // per mode, ground truth
  Mat trajectory;                       // n x (steps+1), truncated on blow-up
  bool converged = false;               // ||x(end)|| <= 1e-3 ||x0||
  int first_passage = -1;               // first k with ||x(k)|| <= 1e-3 ||x0||
};

ClosedLoopReport verify_closed_loop(const SwitchedModel& model,
                                    const std::vector<Mat>& gains, const Vec& x0,
                                    int steps, std::uint64_t seed);

std::string to_json(const SynthesisResult& result);

}  // namespace ddc
