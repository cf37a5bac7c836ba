#include "ddc/bounds.hpp"

#include <cmath>

#include "ddc/errors.hpp"

namespace ddc {

NoiseRatios compute_noise_ratios(const DataMatrices& measured,
                                 const DataMatrices& truth,
                                 const std::vector<int>* cols) {
  if (measured.T() != truth.T() || measured.m() != truth.m() || measured.n() != truth.n()) {
    throw InvalidInput("compute_noise_ratios: matrices built from different trajectories");
  }
  Mat X1m = measured.X1, X1t = truth.X1;
  Mat Sm = stack_UX(measured.U0, measured.X0);
  Mat St = stack_UX(truth.U0, truth.X0);
  if (cols) {
    X1m = select_columns(X1m, *cols);
    X1t = select_columns(X1t, *cols);
    Sm = select_columns(Sm, *cols);
    St = select_columns(St, *cols);
  }
  NoiseRatios r;
  const double x1t_norm = matrix_norm(X1t, NormKind::spectral);
  const double st_norm = matrix_norm(St, NormKind::spectral);
  r.r_X1 = x1t_norm > 0 ? matrix_norm(X1t - X1m, NormKind::spectral) / x1t_norm : 0.0;
  r.r_UX0 = st_norm > 0 ? matrix_norm(St - Sm, NormKind::spectral) / st_norm : 0.0;
  r.source = "oracle";
  if (r.r_UX0 >= 1.0) {
    throw AssumptionViolation("noise ratio r_UX0 = " + std::to_string(r.r_UX0) +
                              " >= 1: data too noisy to bound the estimate");
  }
  return r;
}

double relative_error_bound(double c_UX, const NoiseRatios& r) {
  if (r.r_UX0 >= 1.0) {
    throw AssumptionViolation("relative_error_bound: r_UX0 >= 1");
  }
  if (c_UX < 1.0 || r.r_X1 < 0.0 || r.r_UX0 < 0.0) {
    throw InvalidInput("relative_error_bound: need c_UX >= 1 and nonnegative ratios");
  }
  return c_UX * (r.r_X1 + r.r_UX0) / (1.0 - r.r_UX0);
}

std::optional<double> absolute_error_bound(double relative_bound, double est_norm) {
  if (relative_bound >= 1.0) return std::nullopt;
  return relative_bound / (1.0 - relative_bound) * est_norm;
}

double uncertainty_radius(double absolute_bound, double K_bar) {
  return absolute_bound * std::sqrt(K_bar * K_bar + 1.0);
}

ErrorBudget make_budget(double c_UX, const NoiseRatios& r, double est_norm, double K_bar) {
  ErrorBudget b;
  b.c_UX = c_UX;
  b.ratios = r;
  b.relative_bound = relative_error_bound(c_UX, r);
  b.c_bar = b.relative_bound;
  b.absolute_bound = absolute_error_bound(b.relative_bound, est_norm);
  if (b.absolute_bound) b.radius_DX1 = uncertainty_radius(*b.absolute_bound, K_bar);
  return b;
}

}  // namespace ddc
