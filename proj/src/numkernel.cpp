#include "ddc/numkernel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ddc {

namespace {

void require_finite(const Mat& M, const char* who) {
  if (!M.allFinite()) {
    throw InvalidInput(std::string(who) + ": matrix has non-finite entries");
  }
}

Eigen::BDCSVD<Mat> svd_of(const Mat& M, unsigned options = 0) {
  Eigen::BDCSVD<Mat> svd(M, options);
  return svd;
}

}  // namespace

double matrix_norm(const Mat& M, NormKind kind) {
  require_finite(M, "matrix_norm");
  if (kind == NormKind::frobenius) return M.norm();
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  return svd_of(M).singularValues()(0);
}

RankInfo numerical_rank(const Mat& M) {
  require_finite(M, "numerical_rank");
  RankInfo info;
  if (M.rows() == 0 || M.cols() == 0) return info;
  const Vec sv = svd_of(M).singularValues();
  info.tolerance = static_cast<double>(std::max(M.rows(), M.cols())) *
                   std::numeric_limits<double>::epsilon() * sv(0);
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > info.tolerance) {
      info.rank = i + 1;
      info.smallest_kept = sv(i);
    }
  }
  return info;
}

Mat right_pseudo_inverse(const Mat& M) {
  require_finite(M, "right_pseudo_inverse");
  if (M.rows() > M.cols()) {
    throw RankDeficient("right_pseudo_inverse: more rows than columns, row rank " +
                            std::to_string(M.cols()) + " at most",
                        static_cast<int>(M.cols()));
  }
  Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(M.rows(), M.cols())) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) rank = i + 1;
  if (rank < M.rows()) {
    throw RankDeficient("right_pseudo_inverse: numerical row rank " +
                            std::to_string(rank) + " < " + std::to_string(M.rows()),
                        rank);
  }
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

double condition_number(const Mat& M) {
  require_finite(M, "condition_number");
  const Vec sv = svd_of(M).singularValues();
  const double tol = static_cast<double>(std::max(M.rows(), M.cols())) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  const int want = static_cast<int>(std::min(M.rows(), M.cols()));
  if (sv(want - 1) <= tol) {
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > tol) rank = i + 1;
    throw RankDeficient("condition_number: rank-deficient matrix, numerical rank " +
                            std::to_string(rank),
                        rank);
  }
  return sv(0) / sv(want - 1);
}

double min_eigenvalue_sym(const Mat& S) {
  require_finite(S, "min_eigenvalue_sym");
  if (S.rows() != S.cols()) {
    throw InvalidInput("min_eigenvalue_sym: matrix is not square");
  }
  const Mat sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_radius(const Mat& A) {
  require_finite(A, "spectral_radius");
  if (A.rows() != A.cols()) throw InvalidInput("spectral_radius: matrix is not square");
  Eigen::EigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace kernels {

namespace {

// column-major axpy kernel; j outer keeps the C column hot
inline void matmul_cols(const Mat& A, const Mat& B, Mat& C, int j0, int j1) {
  const Eigen::Index rows = A.rows();
  const Eigen::Index inner = A.cols();
  for (int j = j0; j < j1; ++j) {
    double* c = C.col(j).data();
    for (Eigen::Index i = 0; i < rows; ++i) c[i] = 0.0;
    for (Eigen::Index k = 0; k < inner; ++k) {
      const double b = B(k, j);
      if (b == 0.0) continue;
      const double* a = A.col(k).data();
      for (Eigen::Index i = 0; i < rows; ++i) c[i] += b * a[i];
    }
  }
}

}  // namespace

void matmul_serial(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols() != B.rows()) throw InvalidInput("matmul: inner dimensions differ");
  C.resize(A.rows(), B.cols());
  matmul_cols(A, B, C, 0, static_cast<int>(B.cols()));
}

void matmul_omp(const Mat& A, const Mat& B, Mat& C) {
  if (A.cols() != B.rows()) throw InvalidInput("matmul: inner dimensions differ");
  C.resize(A.rows(), B.cols());
  const int cols = static_cast<int>(B.cols());
#pragma omp parallel for schedule(static)
  for (int j = 0; j < cols; ++j) {
    matmul_cols(A, B, C, j, j + 1);
  }
}

Mat matmul(const Mat& A, const Mat& B) {
  Mat C;
  const double work = static_cast<double>(A.rows()) * A.cols() * B.cols();
  bool nested = false;
#ifdef _OPENMP
  nested = omp_in_parallel();
#endif
  if (work >= 2.0e5 && !nested) {
    matmul_omp(A, B, C);
  } else {
    matmul_serial(A, B, C);
  }
  return C;
}

}  // namespace kernels

}  // namespace ddc
