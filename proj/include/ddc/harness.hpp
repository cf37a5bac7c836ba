#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddc/bounds.hpp"
#include "ddc/datamat.hpp"
#include "ddc/identify.hpp"
#include "ddc/plant.hpp"
#include "ddc/precond.hpp"
#include "ddc/synth.hpp"

namespace ddc {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ExperimentConfig {
  int n = 20;
  int m = 10;
  int gamma = 5;
  int T = 500;
  int episode_length = 5;
  double noise_pct = 0.005;
  std::uint64_t seed = 1;
  double K_bar = 3.0;
  std::vector<double> lambda_grid = {1.0, 0.75, 0.5, 0.25, 0.1, 0.01};
  double margin_eta = 1e-3;
  std::string precondition = "ruiz";  // none | ruiz | colsel | both
  std::string output_dir = "out";
  double input_scale = 0.1;
  double x0_scale = 1.0;
  bool allow_column_subset = false;
  int subset_cols = 150;
  int colsel_trials = 200;
  int verify_steps = 500;
};

ExperimentConfig config_from_json_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string to_json(const ExperimentConfig& cfg);

struct ModeRow {
  int mode = 0;  // 1-based
  double kappa_raw = 0.0;
  double kappa_pre = 0.0;
  double bound_raw = 0.0;
  double bound_pre = 0.0;             // scaled-system bound, rescaled ratios
  double bound_pre_raw_ratios = 0.0;  // same condition number, raw ratios
  double err_raw = 0.0;
  double err_pre = 0.0;               // unscaled-frame actual error
  double err_pre_scaled_frame = 0.0;  // the quantity the scaled bound controls
  ErrorBudget budget_raw;
  ErrorBudget budget_pre;
  std::optional<double> kappa_colsel;
  bool colsel_improved = false;
};

struct SynthesisSummary {
  bool attempted = false;
  bool feasible = false;
  std::vector<double> lambdas;
  std::vector<double> gain_norms;
  std::vector<double> est_closed_loop_norms;
  std::vector<bool> delta_absorbed;
  std::vector<int> infeasible_modes;
  std::string message;
};

struct VerificationSummary {
  bool ran = false;
  std::vector<double> spectral_radii;
  std::vector<double> spectral_norms;
  bool converged = false;
  int first_passage = -1;
};

struct Report {
  ExperimentConfig config;
  std::vector<ModeRow> rows;
  IdentifiedModel model_raw;
  IdentifiedModel model_pre;
  SynthesisResult synthesis;
  SynthesisSummary synth_summary;
  VerificationSummary verification;
  std::vector<Preconditioner> preconditioners;  // per mode
  std::string failed_at;   // empty on success
  std::string error;       // message when failed_at is set
  int exit_code = 0;       // CLI mapping for the failure, 0 on success

  std::string to_json() const;
};

// generate -> corrupt -> identify -> bound -> pre-condition -> synthesize ->
// verify, with oracle noise ratios. Stage failures are captured in the report
// (failed_at, error) rather than thrown, so partial output still flushes.
Report run_experiment(const ExperimentConfig& cfg);

// report.json, table_condition.csv, table_bounds.csv, table_errors.csv,
// trajectory.csv and a small gnuplot stub.
void emit_report(const Report& report, const std::string& dir);

struct BatchResult {
  std::vector<Report> reports;  // one per seed, ordered
};

BatchResult run_batch(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                      const std::string& out_dir, bool emit_each = true);

}  // namespace ddc
