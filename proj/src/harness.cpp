#include "pmap/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pmap/baselines.hpp"
#include "pmap/bounds.hpp"
#include "pmap/oracle.hpp"
#include "pmap/parallel.hpp"
#include "pmap/perturb.hpp"
#include "pmap/rng.hpp"

namespace pmap {

namespace {

const char* kSweepHeader =
    "estimator,coupling,trial,estimate,oracle_logz,abs_error,wall_ms,status";

double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw std::invalid_argument("bad " + what + ": '" + s + "'");
  }
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("bad " + what + ": '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("bad " + what + ": '" + s + "'");
  }
  return v;
}

}  // namespace

std::string EstimatorSetting::label() const {
  std::string s = name;
  for (const auto& [k, v] : params) s += " " + k + "=" + v;
  return s;
}

std::optional<std::string> EstimatorSetting::param(const std::string& key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return std::nullopt;
}

double EstimatorSetting::param_or(const std::string& key, double fallback) const {
  auto v = param(key);
  return v ? parse_double(*v, key) : fallback;
}

std::string EstimatorSetting::param_or(const std::string& key,
                                       const std::string& fallback) const {
  auto v = param(key);
  return v ? *v : fallback;
}

EstimatorSetting parse_estimator_setting(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("empty estimator setting");
  EstimatorSetting e;
  e.name = tokens[0];
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto pos = tokens[i].find('=');
    if (pos == std::string::npos || pos == 0 || pos + 1 == tokens[i].size()) {
      throw std::invalid_argument("estimator parameter must be key=value: '" +
                                  tokens[i] + "'");
    }
    e.params.emplace_back(tokens[i].substr(0, pos), tokens[i].substr(pos + 1));
  }
  static const char* known[] = {"upper_bound", "lower_bound", "inflation",
                                "full",        "map",         "bp",
                                "trbp",        "sequential"};
  if (std::find(std::begin(known), std::end(known), e.name) == std::end(known)) {
    throw std::invalid_argument("unknown estimator '" + e.name + "'");
  }
  return e;
}

void ExperimentSpec::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("bad grid shape");
  if (field < 0) throw std::invalid_argument("field strength must be >= 0");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (couplings.empty()) throw std::invalid_argument("empty coupling grid");
  if (estimators.empty()) throw std::invalid_argument("no estimators named");
  for (double c : couplings) {
    if (c < 0) throw std::invalid_argument("couplings must be >= 0");
  }
}

ExperimentSpec parse_sweep_spec(const std::string& text,
                                const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  ExperimentSpec spec;
  spec.couplings.clear();
  bool saw_header = false;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    try {
      if (!saw_header) {
        if (tok.size() != 2 || tok[0] != "sweep" || tok[1] != "v1") {
          fail("expected header 'sweep v1'");
        }
        saw_header = true;
      } else if (tok[0] == "grid" && tok.size() == 3) {
        spec.rows = static_cast<int>(parse_long(tok[1], "rows"));
        spec.cols = static_cast<int>(parse_long(tok[2], "cols"));
      } else if (tok[0] == "field" && tok.size() == 2) {
        spec.field = parse_double(tok[1], "field");
      } else if (tok[0] == "couplings" && tok.size() >= 2) {
        for (std::size_t i = 1; i < tok.size(); ++i) {
          spec.couplings.push_back(parse_double(tok[i], "coupling"));
        }
      } else if (tok[0] == "mode" && tok.size() == 2) {
        if (tok[1] == "attractive") {
          spec.mode = CouplingMode::Attractive;
        } else if (tok[1] == "mixed") {
          spec.mode = CouplingMode::Mixed;
        } else {
          fail("mode must be attractive or mixed");
        }
      } else if (tok[0] == "trials" && tok.size() == 2) {
        spec.trials = static_cast<int>(parse_long(tok[1], "trials"));
      } else if (tok[0] == "seed" && tok.size() == 2) {
        spec.seed = parse_u64(tok[1], "seed");
      } else if (tok[0] == "estimator") {
        spec.estimators.push_back(
            parse_estimator_setting({tok.begin() + 1, tok.end()}));
      } else {
        fail("unrecognized line '" + tok[0] + "'");
      }
    } catch (const std::invalid_argument& ex) {
      fail(ex.what());
    }
  }
  if (spec.couplings.empty()) {
    spec.couplings = {0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& ex) {
    throw std::runtime_error(origin + ": " + ex.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------

namespace {

struct EstOutcome {
  double estimate = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

PerturbationScheme parse_scheme(const std::string& s) {
  if (s == "unary") return PerturbationScheme::unary();
  if (s == "fulljoint") return PerturbationScheme::full_joint();
  if (s == "none") return PerturbationScheme::none();
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

std::vector<double> lambda_grid_from(const EstimatorSetting& e) {
  const double lmax = e.param_or("lambda_max", 0.9);
  const int steps = static_cast<int>(e.param_or("lambda_steps", 10.0));
  if (steps < 1 || lmax < 0 || lmax >= 1.0) {
    throw std::invalid_argument("bad lambda grid parameters");
  }
  std::vector<double> g;
  for (int i = 0; i < steps; ++i) {
    g.push_back(steps == 1 ? 0.0 : lmax * i / (steps - 1));
  }
  return g;
}

EstOutcome run_estimator(const EstimatorSetting& e, const PairwiseModel& model,
                         std::uint64_t seed) {
  EstOutcome out;
  MplpOptions mplp;
  mplp.max_iters = static_cast<int>(e.param_or("mplp_iters", 1000.0));
  mplp.tol = e.param_or("mplp_tol", 1e-8);

  if (e.name == "upper_bound") {
    const auto method = parse_solve_method(e.param_or("solver", "brute"));
    const auto scheme = parse_scheme(e.param_or("scheme", "unary"));
    const auto m = static_cast<std::size_t>(e.param_or("m", 100.0));
    out.estimate = upper_bound_logZ(model, scheme, method, m, seed, mplp).value;
  } else if (e.name == "lower_bound") {
    const auto method = parse_solve_method(e.param_or("solver", "brute"));
    const auto scheme = parse_scheme(e.param_or("scheme", "unary"));
    LowerBoundConfig cfg;
    cfg.draws = static_cast<std::size_t>(e.param_or("m", 100.0));
    cfg.lambda_grid = lambda_grid_from(e);
    out.estimate = lower_bound_logZ(model, scheme, method, cfg, seed, mplp).value;
  } else if (e.name == "inflation") {
    InflationConfig cfg;
    cfg.copies = static_cast<int>(e.param_or("m", 16.0));
    const std::string variant = e.param_or("variant", "exact");
    if (variant == "exact") {
      cfg.variant = InflationVariant::ExactAverage;
    } else if (variant == "tiled") {
      cfg.variant = InflationVariant::TiledGrid;
    } else {
      throw std::invalid_argument("inflation variant must be exact or tiled");
    }
    if (auto b = e.param("beta")) cfg.perturbation_scale = parse_double(*b, "beta");
    cfg.solver = parse_solve_method(e.param_or("solver", "graphcut"));
    cfg.reports = static_cast<int>(e.param_or("reports", 1.0));
    cfg.mplp = mplp;
    out.estimate = approx_logZ_inflation(model, cfg, seed).value;
  } else if (e.name == "full") {
    const auto m = static_cast<std::size_t>(e.param_or("m", 100.0));
    out.estimate = estimate_logZ_full(model, m, seed).value;
  } else if (e.name == "sequential") {
    const auto m = static_cast<std::size_t>(e.param_or("m", 1000.0));
    out.estimate = estimate_logZ_sequential(model, m, seed);
  } else if (e.name == "map") {
    const auto method = parse_solve_method(e.param_or("solver", "brute"));
    out.estimate = solve_map(model, method, mplp).value;
  } else if (e.name == "bp" || e.name == "trbp") {
    BpOptions opts;
    opts.damping = e.param_or("damping", 0.5);
    opts.max_iters = static_cast<int>(e.param_or("max_iters", 2000.0));
    opts.tol = e.param_or("tol", 1e-10);
    BpResult r;
    if (e.name == "bp") {
      r = bp_log_partition(model, opts);
    } else {
      r = trbp_log_partition(model, uniform_spanning_edge_probs(model), opts);
    }
    out.estimate = r.log_z;
    if (!r.converged) out.status = "nonconverged";
  } else {
    throw std::invalid_argument("unknown estimator '" + e.name + "'");
  }
  return out;
}

}  // namespace

SweepResult run_estimation_sweep(const ExperimentSpec& spec, bool timing) {
  spec.validate();
  SweepResult result;
  result.spec = spec;

  const std::size_t nc = spec.couplings.size();
  const std::size_t nt = static_cast<std::size_t>(spec.trials);
  const std::size_t ne = spec.estimators.size();

  struct Cell {
    double oracle = std::numeric_limits<double>::quiet_NaN();
    bool have_oracle = false;
    std::vector<EstOutcome> outcomes;
    std::vector<double> wall_ms;
  };
  std::vector<Cell> cells(nc * nt);

  parallel_for(nc * nt, [&](std::size_t flat) {
    const std::size_t ci = flat / nt;
    const std::size_t trial = flat % nt;
    Cell& cell = cells[flat];

    SpinGlassConfig cfg;
    cfg.rows = spec.rows;
    cfg.cols = spec.cols;
    cfg.field_strength = spec.field;
    cfg.coupling_strength = spec.couplings[ci];
    cfg.mode = spec.mode;
    cfg.seed = derive_seed(spec.seed, ci, trial);
    const PairwiseModel model = gen_spin_glass(cfg);

    if (model.num_states() <= oracle::kDefaultStateCap) {
      cell.oracle = oracle::exact_log_partition(model);
      cell.have_oracle = true;
    }
    cell.outcomes.resize(ne);
    cell.wall_ms.assign(ne, 0.0);
    for (std::size_t k = 0; k < ne; ++k) {
      const std::uint64_t est_seed = derive_seed(cfg.seed, 0x1000 + k);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        cell.outcomes[k] = run_estimator(spec.estimators[k], model, est_seed);
      } catch (const PreconditionError&) {
        cell.outcomes[k].status = "skipped";
      } catch (const std::invalid_argument&) {
        cell.outcomes[k].status = "skipped";
      }
      if (timing) {
        const auto t1 = std::chrono::steady_clock::now();
        cell.wall_ms[k] =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
      }
    }
  });

  for (std::size_t k = 0; k < ne; ++k) {
    const std::string label = spec.estimators[k].label();
    for (std::size_t ci = 0; ci < nc; ++ci) {
      std::vector<double> agg_values;
      for (std::size_t trial = 0; trial < nt; ++trial) {
        const Cell& cell = cells[ci * nt + trial];
        const EstOutcome& o = cell.outcomes[k];
        SweepRow row;
        row.estimator = label;
        row.coupling = spec.couplings[ci];
        row.trial = static_cast<int>(trial);
        row.estimate = o.estimate;
        row.status = o.status;
        row.wall_ms = cell.wall_ms[k];
        if (cell.have_oracle) row.oracle_logz = cell.oracle;
        if (o.status != "skipped") {
          if (cell.have_oracle) {
            row.abs_error = std::fabs(o.estimate - cell.oracle);
            agg_values.push_back(*row.abs_error);
          } else {
            agg_values.push_back(o.estimate);
          }
        }
        result.rows.push_back(std::move(row));
      }
      SweepAggregate agg;
      agg.estimator = label;
      agg.coupling = spec.couplings[ci];
      agg.count = static_cast<int>(agg_values.size());
      if (agg_values.empty()) {
        agg.status = "skipped";
      } else {
        agg.status = "agg";
        double s = 0.0;
        for (double v : agg_values) s += v;
        agg.mean = s / agg_values.size();
        if (agg_values.size() > 1) {
          double ss = 0.0;
          for (double v : agg_values) ss += (v - agg.mean) * (v - agg.mean);
          agg.stderr_ = std::sqrt(ss / (agg_values.size() - 1) /
                                  agg_values.size());
        }
      }
      result.aggregates.push_back(std::move(agg));
    }
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  const ExperimentSpec& spec = result.spec;
  std::ostringstream out;
  out << "# spec: grid=" << spec.rows << "x" << spec.cols
      << " field=" << format_value(spec.field) << " mode="
      << (spec.mode == CouplingMode::Attractive ? "attractive" : "mixed")
      << " trials=" << spec.trials << " seed=" << spec.seed << "\n";
  out << "# couplings:";
  for (double c : spec.couplings) out << ' ' << format_value(c);
  out << "\n";
  for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
    out << "# estimator " << k << ": " << spec.estimators[k].label() << "\n";
  }
  out << kSweepHeader << "\n";

  const std::size_t nc = spec.couplings.size();
  const std::size_t nt = static_cast<std::size_t>(spec.trials);
  for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
    for (std::size_t ci = 0; ci < nc; ++ci) {
      for (std::size_t t = 0; t < nt; ++t) {
        const SweepRow& r = result.rows[(k * nc + ci) * nt + t];
        out << r.estimator << ',' << format_value(r.coupling) << ',' << r.trial
            << ',';
        if (r.status != "skipped") out << format_value(r.estimate);
        out << ',';
        if (r.oracle_logz) out << format_value(*r.oracle_logz);
        out << ',';
        if (r.abs_error) out << format_value(*r.abs_error);
        out << ',' << format_value(r.wall_ms) << ',' << r.status << "\n";
      }
      const SweepAggregate& a = result.aggregates[k * nc + ci];
      out << a.estimator << ',' << format_value(a.coupling) << ",agg,";
      if (a.status == "agg") {
        out << format_value(a.mean) << ",," << format_value(a.stderr_) << ",,agg\n";
      } else {
        out << ",,,,skipped\n";
      }
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------

void LearnConfig::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("bad grid shape");
  if (!(flip_prob >= 0.0 && flip_prob < 0.5)) {
    throw std::invalid_argument("flip_prob must lie in [0, 0.5)");
  }
  if (num_train < 1 || num_test < 1) throw std::invalid_argument("bad counts");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (draws < 1) throw std::invalid_argument("draws must be >= 1");
  parse_scheme(scheme);
}

LearnConfig parse_learn_config(const std::string& text,
                               const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  LearnConfig cfg;
  bool saw_header = false;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    try {
      if (!saw_header) {
        if (tok.size() != 2 || tok[0] != "learn" || tok[1] != "v1") {
          fail("expected header 'learn v1'");
        }
        saw_header = true;
      } else if (tok[0] == "grid" && tok.size() == 3) {
        cfg.rows = static_cast<int>(parse_long(tok[1], "rows"));
        cfg.cols = static_cast<int>(parse_long(tok[2], "cols"));
      } else if (tok[0] == "flip_prob" && tok.size() == 2) {
        cfg.flip_prob = parse_double(tok[1], "flip_prob");
      } else if (tok[0] == "examples" && tok.size() == 3) {
        cfg.num_train = static_cast<int>(parse_long(tok[1], "num_train"));
        cfg.num_test = static_cast<int>(parse_long(tok[2], "num_test"));
      } else if (tok[0] == "epochs" && tok.size() == 2) {
        cfg.epochs = static_cast<int>(parse_long(tok[1], "epochs"));
      } else if (tok[0] == "step" && tok.size() == 2) {
        cfg.step = parse_double(tok[1], "step");
      } else if (tok[0] == "m" && tok.size() == 2) {
        cfg.draws = static_cast<std::size_t>(parse_long(tok[1], "m"));
      } else if (tok[0] == "seed" && tok.size() == 2) {
        cfg.seed = parse_u64(tok[1], "seed");
      } else if (tok[0] == "solver" && tok.size() == 2) {
        cfg.solver = parse_solve_method(tok[1]);
      } else if (tok[0] == "scheme" && tok.size() == 2) {
        cfg.scheme = tok[1];
      } else {
        fail("unrecognized line '" + tok[0] + "'");
      }
    } catch (const std::invalid_argument& ex) {
      fail(ex.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& ex) {
    throw std::runtime_error(origin + ": " + ex.what());
  }
  return cfg;
}

LearnResult run_learning_experiment(const LearnConfig& config) {
  config.validate();
  LearnResult result;
  result.config = config;

  const DenoiseDataset data =
      gen_denoise_dataset(config.rows, config.cols, config.num_train,
                          config.num_test, config.flip_prob,
                          derive_seed(config.seed, 0));
  DenoiseFeatureMap fm(config.rows, config.cols);

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.step = config.step;
  tc.draws = config.draws;
  tc.solver = config.solver;
  tc.mplp = config.mplp;
  if (config.solver == SolveMethod::GraphCut) {
    tc.nonneg_range = fm.pairwise_range();
  }

  const auto run_one = [&](const std::string& method,
                           const PerturbationScheme& scheme,
                           std::uint64_t seed) {
    TrainConfig c = tc;
    c.seed = seed;
    TrainResult tr = train(fm, data.train, scheme, c);
    LearnRun run;
    run.method = method;
    run.history = std::move(tr.history);
    run.train_error = pixel_error(tr.params, data.train, config.solver, config.mplp);
    run.test_error = pixel_error(tr.params, data.test, config.solver, config.mplp);
    return run;
  };

  result.runs.push_back(run_one("perturbed", parse_scheme(config.scheme),
                                derive_seed(config.seed, 1)));
  result.runs.push_back(
      run_one("none", PerturbationScheme::none(), derive_seed(config.seed, 2)));
  return result;
}

std::string learn_csv(const LearnResult& result) {
  const LearnConfig& c = result.config;
  std::ostringstream out;
  out << "# learn: grid=" << c.rows << "x" << c.cols
      << " flip_prob=" << format_value(c.flip_prob) << " train=" << c.num_train
      << " test=" << c.num_test << " epochs=" << c.epochs
      << " step=" << format_value(c.step) << " m=" << c.draws
      << " seed=" << c.seed << " solver=" << solve_method_name(c.solver)
      << " scheme=" << c.scheme << "\n";
  out << "method,epoch,loss,grad_norm,step,train_error,test_error\n";
  for (const LearnRun& run : result.runs) {
    for (const EpochRecord& e : run.history) {
      out << run.method << ',' << e.epoch << ',' << format_value(e.loss) << ','
          << format_value(e.grad_norm) << ',' << format_value(e.step) << ",,\n";
    }
    out << run.method << ",final,,,," << format_value(run.train_error) << ','
        << format_value(run.test_error) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string render_chart_svg(const std::string& csv_text) {
  struct Point {
    double x, y, err;
  };
  std::vector<std::pair<std::string, std::vector<Point>>> series;
  std::istringstream in(csv_text);
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (!saw_header) {
      if (line != kSweepHeader) {
        throw std::runtime_error("malformed CSV: unexpected header '" + line + "'");
      }
      saw_header = true;
      continue;
    }
    if (f.size() != 8) throw std::runtime_error("malformed CSV row: '" + line + "'");
    if (f[2] != "agg" || f[7] != "agg") continue;
    if (f[3].empty()) continue;
    Point p;
    p.x = parse_double(f[1], "coupling");
    p.y = parse_double(f[3], "aggregate mean");
    p.err = f[5].empty() ? 0.0 : parse_double(f[5], "aggregate stderr");
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const auto& s) { return s.first == f[0]; });
    if (it == series.end()) {
      series.push_back({f[0], {p}});
    } else {
      it->second.push_back(p);
    }
  }
  if (!saw_header) throw std::runtime_error("malformed CSV: missing header");
  if (series.empty()) {
    throw std::runtime_error("no aggregate rows to chart");
  }
  for (auto& s : series) {
    std::sort(s.second.begin(), s.second.end(),
              [](const Point& a, const Point& b) { return a.x < b.x; });
  }

  double xmin = series[0].second.front().x, xmax = xmin;
  double ymax = 0.0;
  for (const auto& s : series) {
    for (const Point& p : s.second) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymax = std::max(ymax, p.y + p.err);
    }
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.05;

  const double W = 640, H = 440, L = 70, R = 480, T = 20, B = 390;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (R - L); };
  auto py = [&](double y) { return B - y / ymax * (B - T); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  const int npal = 6;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << B << "\" x2=\"" << R << "\" y2=\""
      << B << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\""
      << B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymax * i / 5.0;
    svg << "<line x1=\"" << svg_num(px(xv)) << "\" y1=\"" << B << "\" x2=\""
        << svg_num(px(xv)) << "\" y2=\"" << B + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << svg_num(px(xv)) << "\" y=\"" << B + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">" << svg_num(xv)
        << "</text>\n";
    svg << "<line x1=\"" << L - 5 << "\" y1=\"" << svg_num(py(yv)) << "\" x2=\""
        << L << "\" y2=\"" << svg_num(py(yv)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << L - 8 << "\" y=\"" << svg_num(py(yv) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << svg_num(yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << (L + R) / 2 << "\" y=\"" << H - 8
      << "\" font-size=\"13\" text-anchor=\"middle\">coupling strength c</text>\n";
  svg << "<text x=\"16\" y=\"" << (T + B) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + B) / 2 << ")\">mean absolute log Z error</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % npal];
    std::ostringstream pts;
    for (const Point& p : series[s].second) {
      pts << svg_num(px(p.x)) << ',' << svg_num(py(p.y)) << ' ';
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    for (const Point& p : series[s].second) {
      if (p.err > 0) {
        svg << "<line x1=\"" << svg_num(px(p.x)) << "\" y1=\""
            << svg_num(py(p.y - p.err)) << "\" x2=\"" << svg_num(px(p.x))
            << "\" y2=\"" << svg_num(py(p.y + p.err)) << "\" stroke=\"" << color
            << "\"/>\n";
      }
      svg << "<circle cx=\"" << svg_num(px(p.x)) << "\" cy=\""
          << svg_num(py(p.y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 16 + 18 * static_cast<double>(s);
    svg << "<rect x=\"" << R + 12 << "\" y=\"" << svg_num(ly - 9)
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << R + 30 << "\" y=\"" << svg_num(ly + 2)
        << "\" font-size=\"11\">" << series[s].first << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pmap
