#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddc/numkernel.hpp"

namespace ddc {

struct LtiModel {
  Mat A;  // n x n state map
  Mat B;  // n x m input map
};

struct SwitchedModel {
  std::vector<LtiModel> modes;  // length gamma >= 1, shared (n, m)

  int n() const { return static_cast<int>(modes.at(0).A.rows()); }
  int m() const { return static_cast<int>(modes.at(0).B.cols()); }
  int gamma() const { return static_cast<int>(modes.size()); }
};

// One contiguous run: column k of states is x(k). Episodic data is a vector
// of these; data-matrix columns never straddle a reset.
struct Trajectory {
  Mat states_true;      // n x (T+1); empty when imported without ground truth
  Mat states_measured;  // n x (T+1)
  Mat inputs;           // m x T
  std::vector<int> modes;  // length T, values in [1, gamma]

  int steps() const { return static_cast<int>(inputs.cols()); }
  bool has_ground_truth() const { return states_true.size() > 0; }
};

// x(k+1) = A_{mode(k)} x(k) + B_{mode(k)} u(k); measured states start equal to
// the true ones. Throws DivergenceError when any state magnitude passes 1e12.
Trajectory simulate(const SwitchedModel& model, const Vec& x0, const Mat& inputs,
                    const std::vector<int>& modes);

// Per-entry relative perturbation x*(1 + eta), eta ~ U(-noise_pct, noise_pct),
// drawn from a counter stream keyed by (seed, time index, coordinate).
Trajectory add_measurement_noise(const Trajectory& traj, double noise_pct,
                                 std::uint64_t seed);

// B_i entries ~ U(0, 0.1); A_i = 0.9 I + dA_i with dA_i entries ~ U(0, 0.1).
SwitchedModel random_ensemble(int n, int m, int gamma, std::uint64_t seed);

struct CollectOptions {
  int total_steps = 500;
  int episode_length = 5;
  double noise_pct = 0.005;
  double input_scale = 0.1;  // u entries ~ U(-s, s)
  double x0_scale = 1.0;     // fresh x0 entries ~ U(-s, s) per episode
};

// Open-loop exploration data, restarted every episode_length steps so the
// unstable ensemble never overflows. Returns one trajectory per episode.
std::vector<Trajectory> collect_episodes(const SwitchedModel& model,
                                         const CollectOptions& opt,
                                         std::uint64_t seed);

// CSV: header `k,x_meas_1..n,u_1..m,mode[,x_true_1..n]`, one row per step;
// k restarts at 0 on each episode boundary. The last row of an episode
// carries the terminal state with empty input/mode fields.
void write_trajectory_csv(const std::string& path,
                          const std::vector<Trajectory>& episodes,
                          bool include_ground_truth);
std::vector<Trajectory> read_trajectory_csv(const std::string& path);

}  // namespace ddc
