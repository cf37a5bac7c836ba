#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ddc/datamat.hpp"

namespace ddc {

// Estimated [B^e | A^e] blocks, one per mode; column split (m | n).
struct IdentifiedModel {
  int m = 0;
  int n = 0;
  std::vector<Mat> blocks;                 // n x (m+n) each
  std::vector<double> condition_numbers;   // of the (masked) stacked data matrix
  std::string path = "raw";

  Mat B(int mode = 0) const { return blocks.at(mode).leftCols(m); }
  Mat A(int mode = 0) const { return blocks.at(mode).rightCols(n); }
};

std::string to_json(const IdentifiedModel& model);
IdentifiedModel identified_model_from_json(const std::string& text);

// [B^e A^e] = X1 [U0; X0]^+_R
IdentifiedModel identify_lti(const DataMatrices& dm);

// Right inverse of a mode-masked stacked matrix with zero rows at the other
// modes' time indices, so [U_j0; X_j0] * result = 0 exactly for j != i.
Mat structured_pseudo_inverse(const Mat& U_i0, const Mat& X_i0,
                              const std::vector<int>& nonzero_cols);

IdentifiedModel identify_switched(const DataMatrices& dm, const ModeMasked& masked);

using BasisFn = std::function<Vec(const Vec&)>;

struct Basis {
  BasisFn fn;
  int input_dim = 0;
  int output_dim = 0;
  std::string description;
};

// Comma-separated feature list, each applied per input coordinate:
//   "1"     constant one
//   "u^K"   K-th power
//   "sin" / "cos"
// e.g. "u^1,u^3" on scalar input -> [u, u^3].
Basis make_basis(const std::string& description, int input_dim);

struct BasisEstimate {
  Mat A;
  std::string basis;
  double cond_phi = 0.0;
};

// A = Y0 Phi0^+_R with Phi0 columns phi(u(k)).
BasisEstimate identify_basis(const Mat& us, const Mat& ys, const Basis& basis);

}  // namespace ddc
