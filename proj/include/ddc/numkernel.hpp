#pragma once

#include <Eigen/Dense>

#include "ddc/errors.hpp"

namespace ddc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class NormKind { spectral, frobenius };

struct RankInfo {
  int rank = 0;
  double smallest_kept = 0.0;  // smallest singular value above tolerance
  double tolerance = 0.0;      // max(rows, cols) * eps * sigma_max
};

double matrix_norm(const Mat& M, NormKind kind);

// Numerical rank with tolerance max(rows, cols) * eps * sigma_max.
RankInfo numerical_rank(const Mat& M);

// Minimum-Frobenius-norm right inverse M^T (M M^T)^{-1}, computed through the
// SVD. Throws RankDeficient when the numerical row rank is short.
Mat right_pseudo_inverse(const Mat& M);

// sigma_max / sigma_min for full-row-rank M; equals ||M|| * ||M^+_R||.
double condition_number(const Mat& M);

// Smallest eigenvalue of (S + S^T)/2. Throws InvalidInput for non-square S.
double min_eigenvalue_sym(const Mat& S);

double spectral_radius(const Mat& A);

namespace kernels {

// C = A * B, hand-rolled. The OpenMP variant splits the columns of C across
// threads; every column is accumulated in the same order as the serial
// reference, so results are bit-identical for any thread count.
void matmul_serial(const Mat& A, const Mat& B, Mat& C);
void matmul_omp(const Mat& A, const Mat& B, Mat& C);
Mat matmul(const Mat& A, const Mat& B);  // dispatches on problem size

}  // namespace kernels

}  // namespace ddc
