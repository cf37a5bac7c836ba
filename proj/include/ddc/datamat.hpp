#pragma once

#include <string>
#include <vector>

#include "ddc/plant.hpp"

namespace ddc {

enum class Source { measured, ground_truth };

// U0 = [u(0)..u(T-1)], X0 = [x(0)..x(T-1)], X1 = [x(1)..x(T)], column-aligned.
struct DataMatrices {
  Mat U0;  // m x T
  Mat X0;  // n x T
  Mat X1;  // n x T
  Source source = Source::measured;

  int T() const { return static_cast<int>(U0.cols()); }
  int m() const { return static_cast<int>(U0.rows()); }
  int n() const { return static_cast<int>(X0.rows()); }
};

DataMatrices build_data_matrices(const Trajectory& traj, Source source);

// Episodes concatenate column-wise; each (u(k), x(k), x(k+1)) triple is valid
// on its own, so resets never leak into the data.
DataMatrices build_data_matrices(const std::vector<Trajectory>& episodes, Source source);

// Concatenated mode sequence matching the data-matrix columns.
std::vector<int> concatenated_modes(const std::vector<Trajectory>& episodes);

// Per-mode masked matrices: column k of (U_i0, X_i0) is zeroed unless
// modes[k] == i. Mode i lives at index i-1.
struct ModeMasked {
  int gamma = 0;
  std::vector<Mat> U;                          // m x T each
  std::vector<Mat> X;                          // n x T each
  std::vector<std::vector<int>> nonzero_cols;  // {k : modes[k] == i}
};

ModeMasked build_mode_masked(const DataMatrices& dm, const std::vector<int>& modes,
                             int gamma = 0);

struct Richness {
  bool satisfied = false;
  int numerical_rank = 0;
  double smallest_kept_singular_value = 0.0;
};

Richness check_richness(const Mat& stacked, int required_rank);

// [U; X] stacking used by every richness/identification call.
Mat stack_UX(const Mat& U, const Mat& X);

// columns of M restricted to an index set
Mat select_columns(const Mat& M, const std::vector<int>& cols);

// Plain matrix CSV (no header, 15 significant digits), shared repo-wide.
void write_matrix_csv(const std::string& path, const Mat& M);
Mat read_matrix_csv(const std::string& path);

}  // namespace ddc
