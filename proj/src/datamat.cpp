#include "ddc/datamat.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ddc/errors.hpp"

namespace ddc {

DataMatrices build_data_matrices(const Trajectory& traj, Source source) {
  const int T = traj.steps();
  if (T < 1) throw InvalidInput("build_data_matrices: empty trajectory");
  if (source == Source::ground_truth && !traj.has_ground_truth()) {
    throw InvalidInput("build_data_matrices: ground truth requested but absent");
  }
  const Mat& states =
      source == Source::ground_truth ? traj.states_true : traj.states_measured;
  DataMatrices dm;
  dm.source = source;
  dm.U0 = traj.inputs;
  dm.X0 = states.leftCols(T);
  dm.X1 = states.rightCols(T);
  return dm;
}

DataMatrices build_data_matrices(const std::vector<Trajectory>& episodes, Source source) {
  if (episodes.empty()) throw InvalidInput("build_data_matrices: no episodes");
  std::vector<DataMatrices> parts;
  parts.reserve(episodes.size());
  int T = 0;
  for (const auto& ep : episodes) {
    parts.push_back(build_data_matrices(ep, source));
    T += parts.back().T();
  }
  DataMatrices dm;
  dm.source = source;
  dm.U0.resize(parts[0].m(), T);
  dm.X0.resize(parts[0].n(), T);
  dm.X1.resize(parts[0].n(), T);
  int at = 0;
  for (const auto& p : parts) {
    dm.U0.middleCols(at, p.T()) = p.U0;
    dm.X0.middleCols(at, p.T()) = p.X0;
    dm.X1.middleCols(at, p.T()) = p.X1;
    at += p.T();
  }
  return dm;
}

std::vector<int> concatenated_modes(const std::vector<Trajectory>& episodes) {
  std::vector<int> modes;
  for (const auto& ep : episodes) modes.insert(modes.end(), ep.modes.begin(), ep.modes.end());
  return modes;
}

ModeMasked build_mode_masked(const DataMatrices& dm, const std::vector<int>& modes,
                             int gamma) {
  const int T = dm.T();
  if (static_cast<int>(modes.size()) != T) {
    throw InvalidInput("build_mode_masked: modes length != T");
  }
  int g = gamma;
  if (g == 0) g = *std::max_element(modes.begin(), modes.end());
  ModeMasked mm;
  mm.gamma = g;
  mm.U.assign(g, Mat::Zero(dm.m(), T));
  mm.X.assign(g, Mat::Zero(dm.n(), T));
  mm.nonzero_cols.assign(g, {});
  for (int k = 0; k < T; ++k) {
    const int s = modes[k];
    if (s < 1 || s > g) throw InvalidInput("build_mode_masked: mode index out of range");
    mm.U[s - 1].col(k) = dm.U0.col(k);
    mm.X[s - 1].col(k) = dm.X0.col(k);
    mm.nonzero_cols[s - 1].push_back(k);
  }
  return mm;
}

Richness check_richness(const Mat& stacked, int required_rank) {
  Richness r;
  if (stacked.size() == 0 || stacked.cwiseAbs().maxCoeff() == 0.0) {
    r.satisfied = required_rank <= 0;
    return r;
  }
  const RankInfo info = numerical_rank(stacked);
  r.numerical_rank = info.rank;
  r.smallest_kept_singular_value = info.smallest_kept;
  r.satisfied = info.rank >= required_rank;
  return r;
}

Mat stack_UX(const Mat& U, const Mat& X) {
  if (U.cols() != X.cols()) throw InvalidInput("stack_UX: column counts differ");
  Mat S(U.rows() + X.rows(), U.cols());
  S.topRows(U.rows()) = U;
  S.bottomRows(X.rows()) = X;
  return S;
}

Mat select_columns(const Mat& M, const std::vector<int>& cols) {
  Mat out(M.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= M.cols()) throw InvalidInput("select_columns: index out of range");
    out.col(static_cast<Eigen::Index>(j)) = M.col(cols[j]);
  }
  return out;
}

void write_matrix_csv(const std::string& path, const Mat& M) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::fprintf(f, j ? ",%.15g" : "%.15g", M(i, j));
    }
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw IoError("ragged matrix csv: " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix csv: " + path);
  Mat M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return M;
}

}  // namespace ddc
