#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddc/datamat.hpp"

namespace ddc {

struct NoiseRatios {
  double r_X1 = 0.0;
  double r_UX0 = 0.0;           // must stay < 1 for the bound to exist
  std::string source = "oracle";
};

// Tightest spectral ratios ||dX||/||X1*|| and ||dUX||/||[U0*;X0*]|| between a
// measured build and its ground-truth twin; optionally restricted to a column
// subset (per-mode masks). Throws AssumptionViolation when r_UX0 >= 1.
NoiseRatios compute_noise_ratios(const DataMatrices& measured,
                                 const DataMatrices& truth,
                                 const std::vector<int>* cols = nullptr);

// c_UX * (r_X1 + r_UX0) / (1 - r_UX0)
double relative_error_bound(double c_UX, const NoiseRatios& r);

// (cbar / (1 - cbar)) * est_norm when cbar < 1, otherwise absent.
std::optional<double> absolute_error_bound(double relative_bound, double est_norm);

// absolute_bound * sqrt(K_bar^2 + 1): tight bound on ||dBA|| * ||[K; I]||
// over ||K|| <= K_bar.
double uncertainty_radius(double absolute_bound, double K_bar);

struct ErrorBudget {
  double c_UX = 1.0;
  NoiseRatios ratios;
  double relative_bound = 0.0;
  double c_bar = 0.0;  // equals relative_bound; kept as its own report field
  std::optional<double> absolute_bound;
  std::optional<double> radius_DX1;
};

// Assembles the budget; radius present iff c_bar < 1.
ErrorBudget make_budget(double c_UX, const NoiseRatios& r, double est_norm, double K_bar);

}  // namespace ddc
