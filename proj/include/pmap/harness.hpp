#pragma once
// Experiment orchestration: estimation-error sweeps over spin glass
// ensembles, the denoising learning experiment, CSV emission, and a small
// SVG chart renderer. All outputs are deterministic functions of the spec
// and seed (timing columns are zero unless explicitly enabled).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmap/crf.hpp"
#include "pmap/mapsolve.hpp"
#include "pmap/model.hpp"

namespace pmap {

// One estimator invocation as named in a spec file, e.g.
//   estimator upper_bound solver=graphcut m=100
struct EstimatorSetting {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;

  std::string label() const;  // "name k=v k=v", the CSV estimator column
  std::optional<std::string> param(const std::string& key) const;
  double param_or(const std::string& key, double fallback) const;
  std::string param_or(const std::string& key, const std::string& fallback) const;
};

EstimatorSetting parse_estimator_setting(const std::vector<std::string>& tokens);

struct ExperimentSpec {
  int rows = 3, cols = 3;
  double field = 1.0;
  std::vector<double> couplings = {0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  CouplingMode mode = CouplingMode::Attractive;
  int trials = 1;
  std::uint64_t seed = 0;
  std::vector<EstimatorSetting> estimators;

  void validate() const;
};

// Line-oriented spec file:
//   sweep v1
//   grid <rows> <cols>
//   field <f>
//   couplings <c1> <c2> ...
//   mode attractive|mixed
//   trials <t>
//   seed <s>
//   estimator <name> [k=v ...]     (repeatable)
ExperimentSpec parse_sweep_spec(const std::string& text,
                                const std::string& origin = "<string>");

struct SweepRow {
  std::string estimator;
  double coupling = 0.0;
  int trial = 0;
  double estimate = 0.0;
  std::optional<double> oracle_logz;
  std::optional<double> abs_error;
  double wall_ms = 0.0;
  std::string status;  // ok | nonconverged | skipped
};

struct SweepAggregate {
  std::string estimator;
  double coupling = 0.0;
  int count = 0;              // contributing trials
  double mean = 0.0;          // mean |error|, or mean estimate without oracle
  double stderr_ = 0.0;
  std::string status;         // agg | skipped
};

struct SweepResult {
  ExperimentSpec spec;
  std::vector<SweepRow> rows;            // (estimator, coupling, trial) order
  std::vector<SweepAggregate> aggregates;
};

// Per-trial model seed is derive_seed(master, coupling index, trial), so
// every estimator sees the identical instance per cell. Estimator
// precondition conflicts become `skipped` rows, never failures.
SweepResult run_estimation_sweep(const ExperimentSpec& spec,
                                 bool timing = false);

std::string sweep_csv(const SweepResult& result);

// ---------------------------------------------------------------------------

struct LearnConfig {
  int rows = 16, cols = 16;
  double flip_prob = 0.1;
  int num_train = 10, num_test = 10;
  int epochs = 60;
  double step = 0.5;
  std::size_t draws = 1;
  std::uint64_t seed = 0;
  SolveMethod solver = SolveMethod::GraphCut;
  std::string scheme = "unary";  // perturbed run; the ablation uses none
  MplpOptions mplp;

  void validate() const;
};

LearnConfig parse_learn_config(const std::string& text,
                               const std::string& origin = "<string>");

struct LearnRun {
  std::string method;  // "perturbed" | "none"
  std::vector<EpochRecord> history;
  double train_error = 0.0;
  double test_error = 0.0;
};

struct LearnResult {
  LearnConfig config;
  std::vector<LearnRun> runs;
};

// Trains the perturbed CRF and the zero-perturbation ablation on the same
// dataset and reports pixel errors after MAP decoding.
LearnResult run_learning_experiment(const LearnConfig& config);

std::string learn_csv(const LearnResult& result);

// ---------------------------------------------------------------------------

// Error-bar chart (one series per estimator) from a sweep CSV's aggregate
// rows. Throws std::runtime_error on malformed CSV or an empty aggregate
// section; deterministic output bytes.
std::string render_chart_svg(const std::string& csv_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace pmap
