#include "ddc/plant.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "ddc/errors.hpp"
#include "ddc/rng.hpp"

namespace ddc {

namespace {

constexpr double kStateCap = 1e12;

void check_model(const SwitchedModel& model) {
  if (model.modes.empty()) throw InvalidInput("model has no modes");
  const auto n = model.modes[0].A.rows();
  const auto m = model.modes[0].B.cols();
  for (const auto& md : model.modes) {
    if (md.A.rows() != n || md.A.cols() != n || md.B.rows() != n || md.B.cols() != m) {
      throw InvalidInput("model modes disagree on (n, m)");
    }
    if (!md.A.allFinite() || !md.B.allFinite()) {
      throw InvalidInput("model has non-finite entries");
    }
  }
}

}  // namespace

Trajectory simulate(const SwitchedModel& model, const Vec& x0, const Mat& inputs,
                    const std::vector<int>& modes) {
  check_model(model);
  const int n = model.n();
  const int m = model.m();
  const int T = static_cast<int>(inputs.cols());
  if (x0.size() != n) throw InvalidInput("simulate: x0 dimension mismatch");
  if (inputs.rows() != m) throw InvalidInput("simulate: input dimension mismatch");
  if (static_cast<int>(modes.size()) != T) throw InvalidInput("simulate: modes length != T");

  Trajectory traj;
  traj.states_true.resize(n, T + 1);
  traj.states_true.col(0) = x0;
  traj.inputs = inputs;
  traj.modes = modes;
  for (int k = 0; k < T; ++k) {
    const int s = modes[k];
    if (s < 1 || s > model.gamma()) throw InvalidInput("simulate: mode index out of range");
    const LtiModel& md = model.modes[s - 1];
    traj.states_true.col(k + 1) = md.A * traj.states_true.col(k) + md.B * inputs.col(k);
    if (traj.states_true.col(k + 1).cwiseAbs().maxCoeff() > kStateCap) {
      throw DivergenceError("simulate: state magnitude exceeded 1e12 at step " +
                                std::to_string(k + 1),
                            k + 1);
    }
  }
  traj.states_measured = traj.states_true;
  return traj;
}

Trajectory add_measurement_noise(const Trajectory& traj, double noise_pct,
                                 std::uint64_t seed) {
  if (!traj.has_ground_truth()) {
    throw InvalidInput("add_measurement_noise: trajectory has no ground truth");
  }
  if (noise_pct < 0) throw InvalidInput("add_measurement_noise: negative noise_pct");
  static constexpr std::uint64_t kStream = rng::stream_tag("measurement-noise");
  Trajectory out = traj;
  const auto n = traj.states_true.rows();
  for (Eigen::Index k = 0; k < traj.states_true.cols(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double eta = rng::uniform(seed, kStream,
                                      static_cast<std::uint64_t>(k) * n + i,
                                      -noise_pct, noise_pct);
      out.states_measured(i, k) = traj.states_true(i, k) * (1.0 + eta);
    }
  }
  return out;
}

SwitchedModel random_ensemble(int n, int m, int gamma, std::uint64_t seed) {
  if (n < 1 || m < 1 || gamma < 1) throw InvalidInput("random_ensemble: dimensions must be >= 1");
  static constexpr std::uint64_t kStreamB = rng::stream_tag("ensemble-B");
  static constexpr std::uint64_t kStreamA = rng::stream_tag("ensemble-dA");
  SwitchedModel model;
  model.modes.resize(gamma);
  for (int g = 0; g < gamma; ++g) {
    LtiModel& md = model.modes[g];
    md.B.resize(n, m);
    md.A = 0.9 * Mat::Identity(n, n);
    const std::uint64_t base = static_cast<std::uint64_t>(g) * n * (n + m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        md.B(i, j) = rng::uniform(seed, kStreamB, base + static_cast<std::uint64_t>(i) * m + j,
                                  0.0, 0.1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        md.A(i, j) += rng::uniform(seed, kStreamA, base + static_cast<std::uint64_t>(i) * n + j,
                                   0.0, 0.1);
  }
  return model;
}

std::vector<Trajectory> collect_episodes(const SwitchedModel& model,
                                         const CollectOptions& opt,
                                         std::uint64_t seed) {
  check_model(model);
  if (opt.total_steps < 1 || opt.episode_length < 1) {
    throw InvalidInput("collect_episodes: steps and episode length must be >= 1");
  }
  static constexpr std::uint64_t kStreamX0 = rng::stream_tag("episode-x0");
  static constexpr std::uint64_t kStreamU = rng::stream_tag("exploration-input");
  static constexpr std::uint64_t kStreamMode = rng::stream_tag("switching");
  static constexpr std::uint64_t kStreamNoise = rng::stream_tag("measurement-noise");
  const int n = model.n();
  const int m = model.m();
  std::vector<Trajectory> episodes;
  int done = 0;
  int ep = 0;
  std::uint64_t state_counter = 0;  // one index per collected state sample
  while (done < opt.total_steps) {
    const int steps = std::min(opt.episode_length, opt.total_steps - done);
    Vec x0(n);
    for (int i = 0; i < n; ++i)
      x0(i) = rng::uniform(seed, kStreamX0, static_cast<std::uint64_t>(ep) * n + i,
                           -opt.x0_scale, opt.x0_scale);
    Mat inputs(m, steps);
    std::vector<int> modes(steps);
    for (int k = 0; k < steps; ++k) {
      const std::uint64_t global = static_cast<std::uint64_t>(done + k);
      for (int i = 0; i < m; ++i)
        inputs(i, k) = rng::uniform(seed, kStreamU, global * m + i,
                                    -opt.input_scale, opt.input_scale);
      modes[k] = rng::uniform_int(seed, kStreamMode, global, 1, model.gamma());
    }
    Trajectory traj = simulate(model, x0, inputs, modes);
    if (opt.noise_pct > 0) {
      for (Eigen::Index k = 0; k < traj.states_true.cols(); ++k, ++state_counter) {
        for (int i = 0; i < n; ++i) {
          const double eta = rng::uniform(seed, kStreamNoise, state_counter * n + i,
                                          -opt.noise_pct, opt.noise_pct);
          traj.states_measured(i, k) = traj.states_true(i, k) * (1.0 + eta);
        }
      }
    } else {
      state_counter += traj.states_true.cols();
    }
    episodes.push_back(std::move(traj));
    done += steps;
    ++ep;
  }
  return episodes;
}

namespace {

void write_row(std::FILE* f, double v, bool lead_comma) {
  std::fprintf(f, lead_comma ? ",%.15g" : "%.15g", v);
}

}  // namespace

void write_trajectory_csv(const std::string& path,
                          const std::vector<Trajectory>& episodes,
                          bool include_ground_truth) {
  if (episodes.empty()) throw InvalidInput("write_trajectory_csv: no episodes");
  const auto n = episodes[0].states_measured.rows();
  const auto m = episodes[0].inputs.rows();
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fprintf(f, "k");
  for (Eigen::Index i = 0; i < n; ++i) std::fprintf(f, ",x_meas_%ld", static_cast<long>(i + 1));
  for (Eigen::Index i = 0; i < m; ++i) std::fprintf(f, ",u_%ld", static_cast<long>(i + 1));
  std::fprintf(f, ",mode");
  if (include_ground_truth) {
    for (Eigen::Index i = 0; i < n; ++i) std::fprintf(f, ",x_true_%ld", static_cast<long>(i + 1));
  }
  std::fprintf(f, "\n");
  for (const auto& ep : episodes) {
    if (include_ground_truth && !ep.has_ground_truth()) {
      std::fclose(f);
      throw InvalidInput("write_trajectory_csv: ground truth requested but absent");
    }
    const int T = ep.steps();
    for (int k = 0; k <= T; ++k) {
      std::fprintf(f, "%d", k);
      for (Eigen::Index i = 0; i < n; ++i) write_row(f, ep.states_measured(i, k), true);
      if (k < T) {
        for (Eigen::Index i = 0; i < m; ++i) write_row(f, ep.inputs(i, k), true);
        std::fprintf(f, ",%d", ep.modes[k]);
      } else {
        for (Eigen::Index i = 0; i < m; ++i) std::fprintf(f, ",");
        std::fprintf(f, ",");  // terminal row: no input, no mode
      }
      if (include_ground_truth) {
        for (Eigen::Index i = 0; i < n; ++i) write_row(f, ep.states_true(i, k), true);
      }
      std::fprintf(f, "\n");
    }
  }
  std::fclose(f);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  return std::stod(s);
}

}  // namespace

std::vector<Trajectory> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trajectory file: " + path);
  const auto header = split_csv(line);
  int n = 0, m = 0;
  bool ground_truth = false;
  for (const auto& h : header) {
    if (h.rfind("x_meas_", 0) == 0) ++n;
    else if (h.rfind("u_", 0) == 0) ++m;
    else if (h.rfind("x_true_", 0) == 0) ground_truth = true;
  }
  if (n == 0 || header.empty() || header[0] != "k") {
    throw IoError("trajectory file has unexpected header: " + path);
  }

  struct Row {
    int k;
    Vec xm, xt;
    Vec u;
    int mode;      // 0 marks a terminal row
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (static_cast<int>(f.size()) < 1 + n + m + 1) {
      throw IoError("trajectory row has too few fields: " + path);
    }
    Row r;
    r.k = static_cast<int>(to_double(f[0]));
    r.xm.resize(n);
    for (int i = 0; i < n; ++i) r.xm(i) = to_double(f[1 + i]);
    const bool terminal = f[1 + n].empty();
    r.u.resize(m);
    if (!terminal) {
      for (int i = 0; i < m; ++i) r.u(i) = to_double(f[1 + n + i]);
      r.mode = static_cast<int>(to_double(f[1 + n + m]));
    } else {
      r.mode = 0;
    }
    if (ground_truth) {
      r.xt.resize(n);
      for (int i = 0; i < n; ++i) r.xt(i) = to_double(f[2 + n + m + i]);
    }
    rows.push_back(std::move(r));
  }

  std::vector<Trajectory> episodes;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].mode != 0) ++j;
    if (j == rows.size()) throw IoError("trajectory episode missing terminal row: " + path);
    const int T = static_cast<int>(j - i);
    if (T < 1) throw IoError("trajectory episode with no steps: " + path);
    Trajectory ep;
    ep.states_measured.resize(n, T + 1);
    ep.inputs.resize(m, T);
    ep.modes.resize(T);
    if (ground_truth) ep.states_true.resize(n, T + 1);
    for (int k = 0; k <= T; ++k) {
      const Row& r = rows[i + k];
      ep.states_measured.col(k) = r.xm;
      if (ground_truth) ep.states_true.col(k) = r.xt;
      if (k < T) {
        ep.inputs.col(k) = r.u;
        ep.modes[k] = r.mode;
      }
    }
    episodes.push_back(std::move(ep));
    i = j + 1;
  }
  if (episodes.empty()) throw IoError("no episodes in trajectory file: " + path);
  return episodes;
}

}  // namespace ddc
