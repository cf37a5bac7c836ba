#include "ddc/precond.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ddc/errors.hpp"
#include "ddc/rng.hpp"

namespace ddc {

RuizResult ruiz_equilibrate(const Mat& M, int max_iters, double tol) {
  const Eigen::Index rows = M.rows();
  const Eigen::Index cols = M.cols();
  RuizResult res;
  res.d_left = Vec::Ones(rows);
  res.d_right = Vec::Ones(cols);
  res.scaled = M;

  std::vector<bool> nonzero_col(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    nonzero_col[j] = res.scaled.col(j).cwiseAbs().maxCoeff() > 0.0;
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (M.row(i).cwiseAbs().maxCoeff() == 0.0) {
      throw InvalidInput("ruiz_equilibrate: all-zero row " + std::to_string(i));
    }
  }

  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it + 1;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double s = 1.0 / std::sqrt(res.scaled.row(i).cwiseAbs().maxCoeff());
      res.scaled.row(i) *= s;
      res.d_left(i) *= s;
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!nonzero_col[j]) continue;
      const double s = 1.0 / std::sqrt(res.scaled.col(j).cwiseAbs().maxCoeff());
      res.scaled.col(j) *= s;
      res.d_right(j) *= s;
    }
    bool done = true;
    for (Eigen::Index i = 0; i < rows && done; ++i) {
      done = std::abs(res.scaled.row(i).cwiseAbs().maxCoeff() - 1.0) <= tol;
    }
    for (Eigen::Index j = 0; j < cols && done; ++j) {
      if (!nonzero_col[j]) continue;
      done = std::abs(res.scaled.col(j).cwiseAbs().maxCoeff() - 1.0) <= tol;
    }
    if (done) {
      res.converged = true;
      break;
    }
  }
  return res;
}

namespace {

// next combination in lexicographic order; false when exhausted
bool next_combination(std::vector<int>& idx, int n) {
  const int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < n - (k - i)) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

double log_choose(int n, int k) {
  double s = 0;
  for (int i = 0; i < k; ++i) s += std::log(double(n - i)) - std::log(double(i + 1));
  return s;
}

}  // namespace

std::vector<int> column_select(const Mat& M, int min_cols, int trials,
                               std::uint64_t seed, ColumnSelectInfo* info) {
  static constexpr std::uint64_t kStream = rng::stream_tag("column-select");
  const int rows = static_cast<int>(M.rows());
  std::vector<int> candidates;  // nonzero columns only
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    if (M.col(j).cwiseAbs().maxCoeff() > 0.0) candidates.push_back(static_cast<int>(j));
  }
  const int nc = static_cast<int>(candidates.size());
  std::vector<int> full(static_cast<std::size_t>(M.cols()));
  std::iota(full.begin(), full.end(), 0);

  ColumnSelectInfo local;
  double kappa_full = 0.0;
  try {
    kappa_full = condition_number(M);
  } catch (const RankDeficient&) {
    if (info) {
      info->note = "full set is rank deficient; nothing to select";
      *info = local;
    }
    return full;
  }
  local.kappa_full = kappa_full;
  local.kappa_selected = kappa_full;

  if (min_cols < rows) min_cols = rows;
  if (min_cols >= nc) {
    local.note = "size floor leaves no proper subset";
    if (info) *info = local;
    return full;
  }

  // Selection operates on the standardized matrix (unit-norm nonzero columns);
  // subsets are sampled uniformly and ranked by the raw submatrix condition.
  double best_kappa = kappa_full;
  std::vector<int> best = full;
  int used = 0;

  for (int size = min_cols; size < nc; ++size) {
    // enumerate when the subset space is small, otherwise sample
    const bool enumerate = log_choose(nc, size) <= std::log(double(trials));
    std::vector<std::vector<int>> subsets;
    if (enumerate) {
      std::vector<int> idx(static_cast<std::size_t>(size));
      std::iota(idx.begin(), idx.end(), 0);
      do {
        std::vector<int> cols;
        cols.reserve(idx.size());
        for (int i : idx) cols.push_back(candidates[static_cast<std::size_t>(i)]);
        subsets.push_back(std::move(cols));
      } while (next_combination(idx, nc));
    } else {
      for (int t = 0; t < trials; ++t) {
        // Fisher-Yates prefix draw keyed by (seed, size, trial)
        std::vector<int> pool = candidates;
        const std::uint64_t base =
            (static_cast<std::uint64_t>(size) << 32) + static_cast<std::uint64_t>(t) * 1024;
        for (int i = 0; i < size; ++i) {
          const int j = i + rng::uniform_int(seed, kStream, base + static_cast<std::uint64_t>(i),
                                             0, nc - 1 - i);
          std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        std::vector<int> cols(pool.begin(), pool.begin() + size);
        std::sort(cols.begin(), cols.end());
        subsets.push_back(std::move(cols));
      }
    }
    std::vector<double> kappas(subsets.size(), -1.0);
#pragma omp parallel for schedule(dynamic)
    for (long long s = 0; s < static_cast<long long>(subsets.size()); ++s) {
      const Mat sub = select_columns(M, subsets[static_cast<std::size_t>(s)]);
      try {
        kappas[static_cast<std::size_t>(s)] = condition_number(sub);
      } catch (const RankDeficient&) {
        // skip rank-deficient subsets
      }
    }
    used += static_cast<int>(subsets.size());
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      if (kappas[s] > 0 && kappas[s] < best_kappa) {
        best_kappa = kappas[s];
        best = subsets[s];
      }
    }
  }

  local.trials_used = used;
  local.kappa_selected = best_kappa;
  local.improved = best_kappa < kappa_full && best.size() < full.size();
  if (!local.improved) {
    local.note = "no sampled subset improved on the full set";
    best = full;
    local.kappa_selected = kappa_full;
  }
  if (info) *info = local;
  return best;
}

Preconditioner make_ruiz_preconditioner(const Mat& stacked, int max_iters, double tol) {
  Preconditioner pc;
  pc.kind = Preconditioner::Kind::diagonal;
  const RuizResult r = ruiz_equilibrate(stacked, max_iters, tol);
  pc.d_left = r.d_left;
  pc.d_right = r.d_right;
  pc.kappa_before = condition_number(stacked);
  pc.kappa_after = condition_number(r.scaled);
  return pc;
}

Preconditioner make_column_preconditioner(const Mat& stacked, int min_cols, int trials,
                                          std::uint64_t seed) {
  Preconditioner pc;
  pc.kind = Preconditioner::Kind::column_selection;
  ColumnSelectInfo info;
  pc.columns = column_select(stacked, min_cols, trials, seed, &info);
  pc.kappa_before = info.kappa_full;
  pc.kappa_after = info.kappa_selected;
  return pc;
}

IdentifiedModel rescaled_identify(const DataMatrices& dm, const Preconditioner& pc,
                                  double* scaled_block_norm) {
  IdentifiedModel model;
  model.m = dm.m();
  model.n = dm.n();
  if (pc.kind == Preconditioner::Kind::diagonal) {
    if (pc.d_left.size() != dm.m() + dm.n() || pc.d_right.size() != dm.T()) {
      throw InvalidInput("rescaled_identify: diagonal sizes do not match data");
    }
    if ((pc.d_left.array() <= 0).any()) {
      throw InvalidInput("rescaled_identify: D_L must be strictly positive");
    }
    const Mat scaled =
        pc.d_left.asDiagonal() * stack_UX(dm.U0, dm.X0) * pc.d_right.asDiagonal();
    const Mat X1s = dm.X1 * pc.d_right.asDiagonal();
    const Mat scaled_block = X1s * right_pseudo_inverse(scaled);
    if (scaled_block_norm) *scaled_block_norm = matrix_norm(scaled_block, NormKind::spectral);
    model.blocks.push_back(scaled_block * pc.d_left.asDiagonal());
    model.condition_numbers.push_back(condition_number(scaled));
    model.path = "preconditioned(diagonal)";
  } else {
    const Mat sub = stack_UX(select_columns(dm.U0, pc.columns),
                             select_columns(dm.X0, pc.columns));
    const Mat block = select_columns(dm.X1, pc.columns) * right_pseudo_inverse(sub);
    if (scaled_block_norm) *scaled_block_norm = matrix_norm(block, NormKind::spectral);
    model.blocks.push_back(block);
    model.condition_numbers.push_back(condition_number(sub));
    model.path = "preconditioned(column_selection)";
  }
  return model;
}

}  // namespace ddc
