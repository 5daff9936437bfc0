#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pmap/harness.hpp"
#include "pmap/parallel.hpp"

using namespace pmap;

namespace {

int count_lines(const std::string& s, const std::string& needle) {
  int n = 0;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find(needle) != std::string::npos) ++n;
  }
  return n;
}

int count_substr(const std::string& s, const std::string& needle) {
  int n = 0;
  std::size_t pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

}  // namespace

TEST_CASE("sweep spec parsing") {
  const std::string text =
      "sweep v1\n"
      "grid 3 3\n"
      "field 1\n"
      "couplings 0.1 3\n"
      "mode attractive\n"
      "trials 2\n"
      "seed 42\n"
      "estimator upper_bound solver=graphcut m=10\n"
      "estimator bp damping=0.5\n";
  const ExperimentSpec spec = parse_sweep_spec(text);
  CHECK(spec.rows == 3);
  CHECK(spec.couplings == std::vector<double>{0.1, 3});
  CHECK(spec.estimators.size() == 2);
  CHECK(spec.estimators[0].label() == "upper_bound solver=graphcut m=10");

  CHECK_THROWS_AS(parse_sweep_spec("sweep v1\nestimator nosuch\n"),
                  std::runtime_error);
  CHECK_THROWS_AS(parse_sweep_spec("sweep v1\ntrials 0\nestimator bp\n"),
                  std::runtime_error);
}

TEST_CASE("sweep emits one row per trial plus one aggregate row") {
  ExperimentSpec spec;
  spec.rows = 2;
  spec.cols = 2;
  spec.trials = 1;
  spec.couplings = {1.0};
  spec.seed = 3;
  spec.estimators = {parse_estimator_setting({"full", "m=50"})};
  const SweepResult r = run_estimation_sweep(spec);
  CHECK(r.rows.size() == 1);
  CHECK(r.aggregates.size() == 1);
  CHECK(r.rows[0].status == "ok");
  REQUIRE(r.rows[0].oracle_logz.has_value());
  CHECK(*r.rows[0].abs_error ==
        doctest::Approx(std::fabs(r.rows[0].estimate - *r.rows[0].oracle_logz))
            .epsilon(1e-15));

  const std::string csv = sweep_csv(r);
  CHECK(count_lines(csv, ",agg") == 1);
  CHECK(count_lines(csv, ",0,") >= 1);
  CHECK(csv.find("# spec: grid=2x2") != std::string::npos);
  CHECK(csv.find("# couplings: 1") != std::string::npos);
}

TEST_CASE("per-trial abs_error is recomputable from estimate and oracle") {
  ExperimentSpec spec;
  spec.rows = 2;
  spec.cols = 3;
  spec.trials = 4;
  spec.couplings = {0.5, 2.0};
  spec.mode = CouplingMode::Mixed;
  spec.seed = 9;
  spec.estimators = {parse_estimator_setting({"upper_bound", "m=20"}),
                     parse_estimator_setting({"bp"})};
  const SweepResult r = run_estimation_sweep(spec);
  for (const SweepRow& row : r.rows) {
    if (row.status == "skipped") continue;
    REQUIRE(row.oracle_logz.has_value());
    CHECK(*row.abs_error ==
          doctest::Approx(std::fabs(row.estimate - *row.oracle_logz))
              .epsilon(1e-15));
  }
}

TEST_CASE("graphcut estimators on mixed models become skipped rows") {
  ExperimentSpec spec;
  spec.rows = 2;
  spec.cols = 2;
  spec.trials = 2;
  spec.couplings = {1.0};
  spec.mode = CouplingMode::Mixed;
  spec.seed = 5;
  spec.estimators = {
      parse_estimator_setting({"upper_bound", "solver=graphcut", "m=5"}),
      parse_estimator_setting({"full", "m=5"})};
  const SweepResult r = run_estimation_sweep(spec);
  int skipped = 0;
  for (const SweepRow& row : r.rows) {
    if (row.estimator.find("graphcut") != std::string::npos) {
      CHECK(row.status == "skipped");
      ++skipped;
    } else {
      CHECK(row.status == "ok");
    }
  }
  CHECK(skipped == 2);
  CHECK(r.aggregates[0].status == "skipped");
  CHECK(r.aggregates[1].status == "agg");
  CHECK(count_lines(sweep_csv(r), ",,,,skipped") == 1);
}

TEST_CASE("sweep CSV bytes are reproducible and thread-count independent") {
  ExperimentSpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.trials = 3;
  spec.couplings = {0.1, 1.0};
  spec.seed = 31;
  spec.estimators = {
      parse_estimator_setting({"upper_bound", "solver=graphcut", "m=25"}),
      parse_estimator_setting({"trbp"})};
  const std::string a = sweep_csv(run_estimation_sweep(spec));
  set_threads(1);
  const std::string b = sweep_csv(run_estimation_sweep(spec));
  set_threads(max_threads());
  CHECK(a == b);
}

TEST_CASE("chart rendering") {
  ExperimentSpec spec;
  spec.rows = 2;
  spec.cols = 2;
  spec.trials = 2;
  spec.couplings = {0.1, 0.5, 1.0, 2.0, 3.0};
  spec.seed = 8;
  spec.estimators = {parse_estimator_setting({"upper_bound", "m=10"}),
                     parse_estimator_setting({"bp"})};
  const std::string csv = sweep_csv(run_estimation_sweep(spec));
  const std::string svg = render_chart_svg(csv);
  CHECK(count_substr(svg, "<polyline") == 2);   // one per estimator
  CHECK(count_substr(svg, "<circle") == 10);    // five points each
  CHECK(render_chart_svg(csv) == svg);          // identical bytes

  // header-only CSV: no aggregates to chart
  const std::string empty_csv =
      "estimator,coupling,trial,estimate,oracle_logz,abs_error,wall_ms,status\n";
  CHECK_THROWS_AS(render_chart_svg(empty_csv), std::runtime_error);
  CHECK_THROWS_AS(render_chart_svg("nonsense\n"), std::runtime_error);
}

TEST_CASE("learning experiment emits curves and summary rows") {
  LearnConfig cfg;
  cfg.rows = 6;
  cfg.cols = 6;
  cfg.flip_prob = 0.0;
  cfg.num_train = 2;
  cfg.num_test = 2;
  cfg.epochs = 6;
  cfg.step = 0.5;
  cfg.seed = 4;
  const LearnResult r = run_learning_experiment(cfg);
  REQUIRE(r.runs.size() == 2);
  CHECK(r.runs[0].method == "perturbed");
  CHECK(r.runs[1].method == "none");
  // noiseless task: both methods decode the clean image
  CHECK(r.runs[0].test_error == 0.0);
  CHECK(r.runs[1].test_error == 0.0);

  const std::string csv = learn_csv(r);
  CHECK(count_lines(csv, "perturbed,") == 7);  // 6 epochs + final
  CHECK(count_lines(csv, "none,") == 7);
  CHECK(count_lines(csv, ",final,") == 2);

  const std::string again = learn_csv(run_learning_experiment(cfg));
  CHECK(again == csv);
}

TEST_CASE("learn config parsing") {
  const std::string text =
      "learn v1\n"
      "grid 8 8\n"
      "flip_prob 0.1\n"
      "examples 3 2\n"
      "epochs 4\n"
      "step 0.25\n"
      "m 1\n"
      "seed 11\n"
      "solver graphcut\n"
      "scheme unary\n";
  const LearnConfig cfg = parse_learn_config(text);
  CHECK(cfg.rows == 8);
  CHECK(cfg.num_train == 3);
  CHECK(cfg.epochs == 4);
  CHECK_THROWS_AS(parse_learn_config("learn v1\nflip_prob 0.7\n"),
                  std::runtime_error);
}
