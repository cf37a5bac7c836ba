#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddc/datamat.hpp"
#include "ddc/identify.hpp"

namespace ddc {

struct RuizResult {
  Vec d_left;   // rows
  Vec d_right;  // cols; zero columns keep entry 1
  Mat scaled;   // d_left.asDiagonal() * M * d_right.asDiagonal()
  int iterations = 0;
  bool converged = false;
};

// Two-sided max-abs equilibration: every sweep divides each row by the square
// root of its max-abs entry, then each nonzero column likewise; stops when all
// row/column max-abs values are within tol of 1.
RuizResult ruiz_equilibrate(const Mat& M, int max_iters = 100, double tol = 1e-3);

struct ColumnSelectInfo {
  bool improved = false;         // a proper subset beat the full set
  double kappa_full = 0.0;
  double kappa_selected = 0.0;
  int trials_used = 0;
  std::string note;
};

// Randomized well-conditioned column subset search with a size floor; returns
// the full column set when no sampled full-row-rank subset improves on it.
std::vector<int> column_select(const Mat& M, int min_cols, int trials,
                               std::uint64_t seed, ColumnSelectInfo* info = nullptr);

struct Preconditioner {
  enum class Kind { diagonal, column_selection };
  Kind kind = Kind::diagonal;
  Vec d_left, d_right;        // diagonal kind
  std::vector<int> columns;   // column-selection kind
  double kappa_before = 0.0;
  double kappa_after = 0.0;
};

Preconditioner make_ruiz_preconditioner(const Mat& stacked, int max_iters = 100,
                                        double tol = 1e-3);
Preconditioner make_column_preconditioner(const Mat& stacked, int min_cols, int trials,
                                          std::uint64_t seed);

// Identification through the scaled system; diagonal kind solves
// (X1 D_R) = [Bh Ah] (D_L [U0;X0] D_R) and unscales [B A] = [Bh Ah] D_L.
// `scaled_block_norm` (when non-null) receives ||[Bh Ah]|| for bound transfer.
IdentifiedModel rescaled_identify(const DataMatrices& dm, const Preconditioner& pc,
                                  double* scaled_block_norm = nullptr);

}  // namespace ddc
