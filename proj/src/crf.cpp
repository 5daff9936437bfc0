#include "pmap/crf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pmap/oracle.hpp"
#include "pmap/parallel.hpp"
#include "pmap/rng.hpp"

namespace pmap {

DenoiseFeatureMap::DenoiseFeatureMap(int rows, int cols)
    : rows_(rows), cols_(cols), edges_(grid_edges(rows, cols)) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("bad grid shape");
}

int DenoiseFeatureMap::dim() const {
  return num_pixels() + static_cast<int>(edges_.size());
}

PairwiseModel DenoiseFeatureMap::build_model(std::span<const double> theta,
                                             const Observation& x) const {
  const int p = num_pixels();
  if (static_cast<int>(theta.size()) != dim()) {
    throw std::invalid_argument("theta dimension mismatch");
  }
  if (static_cast<int>(x.size()) != p) {
    throw std::invalid_argument("observation size mismatch");
  }
  std::vector<int> cards(p, 2);
  std::vector<std::vector<double>> unary(p);
  for (int i = 0; i < p; ++i) {
    // theta_i * [label agrees with observed pixel]
    unary[i] = {x[i] == 0 ? theta[i] : 0.0, x[i] == 1 ? theta[i] : 0.0};
  }
  std::vector<Edge> edges;
  edges.reserve(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const double w = theta[p + e];
    Edge ed;
    ed.i = edges_[e].first;
    ed.j = edges_[e].second;
    ed.cols = 2;
    ed.table = {w, 0.0, 0.0, w};  // theta_e * [y_i == y_j]
    edges.push_back(std::move(ed));
  }
  return pmap::build_model(std::move(cards), std::move(unary), std::move(edges));
}

void DenoiseFeatureMap::add_features(const Observation& x, const Assignment& y,
                                     double w, std::span<double> out) const {
  const int p = num_pixels();
  for (int i = 0; i < p; ++i) {
    if (y[i] == x[i]) out[i] += w;
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (y[edges_[e].first] == y[edges_[e].second]) out[p + e] += w;
  }
}

// ---------------------------------------------------------------------------

namespace {

void check_params(const CrfParams& params, const Dataset& data) {
  if (!params.feature_map) throw std::invalid_argument("missing feature map");
  if (static_cast<int>(params.theta.size()) != params.feature_map->dim()) {
    throw std::invalid_argument("theta dimension mismatch");
  }
  if (data.empty()) throw std::invalid_argument("empty dataset");
}

}  // namespace

double surrogate_loss(const CrfParams& params, const Dataset& data,
                      const PerturbationScheme& scheme, std::size_t draws,
                      std::uint64_t seed, SolveMethod solver,
                      const MplpOptions& mplp_opts) {
  check_params(params, data);
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  const FeatureMap& fm = *params.feature_map;

  std::vector<double> per_example(data.size(), 0.0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const PairwiseModel model = fm.build_model(params.theta, data[k].x);
    const double base = model.score(data[k].y);
    if (is_forbidden(base)) {
      throw std::invalid_argument("training label is excluded by the model");
    }
    std::vector<double> vals(draws);
    parallel_for(draws, [&](std::size_t j) {
      Rng rng(derive_seed(seed, k, j));
      vals[j] = perturbed_map(model, scheme, 1.0, rng, solver, mplp_opts).value;
    });
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(draws);
    per_example[k] = mean - base;
  }
  double loss = 0.0;
  for (double v : per_example) loss += v;
  return loss;
}

GradientEstimate surrogate_gradient(const CrfParams& params,
                                    const Dataset& data,
                                    const PerturbationScheme& scheme,
                                    std::size_t draws, std::uint64_t seed,
                                    SolveMethod solver,
                                    const MplpOptions& mplp_opts) {
  check_params(params, data);
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  const FeatureMap& fm = *params.feature_map;
  const int d = fm.dim();

  GradientEstimate out;
  out.gradient.assign(d, 0.0);
  out.argmax_counts.resize(data.size());
  out.draws = draws;

  for (std::size_t k = 0; k < data.size(); ++k) {
    const PairwiseModel model = fm.build_model(params.theta, data[k].x);
    const double base = model.score(data[k].y);
    if (is_forbidden(base)) {
      throw std::invalid_argument("training label is excluded by the model");
    }
    std::vector<Assignment> args(draws);
    std::vector<double> vals(draws);
    parallel_for(draws, [&](std::size_t j) {
      Rng rng(derive_seed(seed, k, j));
      PerturbedSolve s = perturbed_map(model, scheme, 1.0, rng, solver, mplp_opts);
      args[j] = std::move(s.argmax);
      vals[j] = s.value;
    });
    auto& counts = out.argmax_counts[k];
    for (const Assignment& a : args) ++counts[a];
    // gradient contribution: E_phat Phi(x, y') - Phi(x, y)
    const double inv = 1.0 / static_cast<double>(draws);
    for (const auto& [a, c] : counts) {
      fm.add_features(data[k].x, a, c * inv, out.gradient);
    }
    fm.add_features(data[k].x, data[k].y, -1.0, out.gradient);
    double mean = 0.0;
    for (double v : vals) mean += v;
    out.loss += mean * inv - base;
  }
  return out;
}

std::vector<double> GradientEstimate::per_coordinate_se(
    const CrfParams& params, const Dataset& data) const {
  const FeatureMap& fm = *params.feature_map;
  const int d = fm.dim();
  // Sum over examples of Var_phat(Phi_k) / draws, coordinatewise.
  std::vector<double> var(d, 0.0);
  std::vector<double> mean(d), f(d);
  for (std::size_t k = 0; k < data.size(); ++k) {
    std::fill(mean.begin(), mean.end(), 0.0);
    const double inv = 1.0 / static_cast<double>(draws);
    for (const auto& [a, c] : argmax_counts[k]) {
      fm.add_features(data[k].x, a, c * inv, mean);
    }
    for (const auto& [a, c] : argmax_counts[k]) {
      std::fill(f.begin(), f.end(), 0.0);
      fm.add_features(data[k].x, a, 1.0, f);
      for (int i = 0; i < d; ++i) {
        var[i] += c * inv * (f[i] - mean[i]) * (f[i] - mean[i]);
      }
    }
  }
  std::vector<double> se(d);
  for (int i = 0; i < d; ++i) {
    se[i] = std::sqrt(var[i] / static_cast<double>(draws));
  }
  return se;
}

std::vector<double> exact_crf_gradient(const CrfParams& params,
                                       const Dataset& data) {
  check_params(params, data);
  const FeatureMap& fm = *params.feature_map;
  std::vector<double> grad(fm.dim(), 0.0);
  for (const LabeledExample& ex : data) {
    const PairwiseModel model = fm.build_model(params.theta, ex.x);
    const double log_z = oracle::exact_log_partition(model);
    oracle::for_each_state(model, [&](const Assignment& y, double s) {
      if (is_forbidden(s)) return;
      fm.add_features(ex.x, y, std::exp(s - log_z), grad);
    });
    fm.add_features(ex.x, ex.y, -1.0, grad);
  }
  return grad;
}

double exact_crf_loss(const CrfParams& params, const Dataset& data) {
  check_params(params, data);
  const FeatureMap& fm = *params.feature_map;
  double loss = 0.0;
  for (const LabeledExample& ex : data) {
    const PairwiseModel model = fm.build_model(params.theta, ex.x);
    loss += oracle::exact_log_partition(model) - model.score(ex.y);
  }
  return loss;
}

// ---------------------------------------------------------------------------

TrainResult train(const FeatureMap& fm, const Dataset& data,
                  const PerturbationScheme& scheme, const TrainConfig& config,
                  std::vector<double> theta0) {
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (data.empty()) throw std::invalid_argument("empty dataset");
  const int d = fm.dim();
  if (theta0.empty()) theta0.assign(d, 0.0);
  if (static_cast<int>(theta0.size()) != d) {
    throw std::invalid_argument("theta0 dimension mismatch");
  }

  TrainResult res;
  res.params.feature_map = &fm;
  std::vector<double> theta = std::move(theta0);

  double initial_loss = 0.0;
  bool have_initial = false;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::uint64_t step_seed = derive_seed(config.seed, epoch);
    CrfParams cur{theta, &fm};
    std::vector<double> grad;
    double loss;
    if (config.exact_gradient) {
      grad = exact_crf_gradient(cur, data);
      loss = exact_crf_loss(cur, data);
    } else {
      GradientEstimate ge = surrogate_gradient(cur, data, scheme, config.draws,
                                               step_seed, config.solver,
                                               config.mplp);
      grad = std::move(ge.gradient);
      loss = ge.loss;
    }
    if (!have_initial) {
      initial_loss = loss;
      have_initial = true;
    } else if (loss > config.divergence_factor * std::max(1.0, std::fabs(initial_loss))) {
      throw std::runtime_error(
          "training diverged at epoch " + std::to_string(epoch) + ": loss " +
          std::to_string(loss) + " vs initial " + std::to_string(initial_loss));
    }

    const double step =
        config.sqrt_decay
            ? config.step / std::sqrt(static_cast<double>(epoch + 1))
            : config.step;
    double gn = 0.0;
    for (int i = 0; i < d; ++i) {
      theta[i] -= step * grad[i];
      gn += grad[i] * grad[i];
    }
    if (config.nonneg_range) {
      for (int i = config.nonneg_range->first; i < config.nonneg_range->second; ++i) {
        theta[i] = std::max(theta[i], 0.0);
      }
    }
    res.history.push_back({epoch, loss, std::sqrt(gn), step});
    res.trajectory.push_back(theta);
  }
  res.params.theta = std::move(theta);
  return res;
}

double pixel_error(const CrfParams& params, const Dataset& data,
                   SolveMethod solver, const MplpOptions& mplp_opts) {
  check_params(params, data);
  const FeatureMap& fm = *params.feature_map;
  double total = 0.0;
  std::size_t pixels = 0;
  for (const LabeledExample& ex : data) {
    const PairwiseModel model = fm.build_model(params.theta, ex.x);
    const MapResult r = solve_map(model, solver, mplp_opts);
    for (std::size_t i = 0; i < ex.y.size(); ++i) {
      total += (r.assignment[i] != ex.y[i]) ? 1.0 : 0.0;
    }
    pixels += ex.y.size();
  }
  return total / static_cast<double>(pixels);
}

// ---------------------------------------------------------------------------

Assignment silhouette_image(int rows, int cols) {
  // Standing-figure blob: head disc, torso ellipse, two legs. Resolution
  // independent so datasets at any grid size share the same shape.
  Assignment img(static_cast<std::size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = (r + 0.5) / rows;   // 0 top .. 1 bottom
      const double u = (c + 0.5) / cols;   // 0 left .. 1 right
      bool fg = false;
      {
        const double du = (u - 0.5) / 0.14, dv = (v - 0.18) / 0.13;
        fg |= du * du + dv * dv <= 1.0;  // head
      }
      {
        const double du = (u - 0.5) / 0.20, dv = (v - 0.48) / 0.22;
        fg |= du * du + dv * dv <= 1.0;  // torso
      }
      fg |= (v > 0.62 && v < 0.95 && std::fabs(u - 0.40) < 0.07);  // legs
      fg |= (v > 0.62 && v < 0.95 && std::fabs(u - 0.60) < 0.07);
      img[static_cast<std::size_t>(r) * cols + c] = fg ? 1 : 0;
    }
  }
  return img;
}

DenoiseDataset gen_denoise_dataset(int rows, int cols, int num_train,
                                   int num_test, double flip_prob,
                                   std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("bad grid shape");
  if (num_train < 0 || num_test < 0) throw std::invalid_argument("bad counts");
  if (!(flip_prob >= 0.0 && flip_prob < 0.5)) {
    throw std::invalid_argument("flip_prob must lie in [0, 0.5)");
  }
  DenoiseDataset d;
  d.rows = rows;
  d.cols = cols;
  d.flip_prob = flip_prob;
  d.seed = seed;
  d.clean = silhouette_image(rows, cols);

  auto make_example = [&](std::uint64_t tag, int index) {
    Rng rng(derive_seed(seed, tag, static_cast<std::uint64_t>(index)));
    LabeledExample ex;
    ex.y = d.clean;
    ex.x.resize(d.clean.size());
    for (std::size_t i = 0; i < d.clean.size(); ++i) {
      const bool flip = rng.uniform01() < flip_prob;
      ex.x[i] = flip ? 1 - d.clean[i] : d.clean[i];
    }
    return ex;
  };
  for (int i = 0; i < num_train; ++i) d.train.push_back(make_example(0, i));
  for (int i = 0; i < num_test; ++i) d.test.push_back(make_example(1, i));
  return d;
}

namespace {

void append_grid(std::ostringstream& out, const Assignment& img, int rows,
                 int cols) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out << img[static_cast<std::size_t>(r) * cols + c];
    out << "\n";
  }
}

}  // namespace

std::string format_denoise_dataset(const DenoiseDataset& d) {
  std::ostringstream out;
  out << "dset v1 " << d.rows << ' ' << d.cols << ' ' << d.train.size() << ' '
      << d.test.size() << ' ' << format_value(d.flip_prob) << ' ' << d.seed
      << "\n";
  out << "clean\n";
  append_grid(out, d.clean, d.rows, d.cols);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    out << "train " << i << "\n";
    append_grid(out, d.train[i].x, d.rows, d.cols);
  }
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    out << "test " << i << "\n";
    append_grid(out, d.test[i].x, d.rows, d.cols);
  }
  return out.str();
}

DenoiseDataset parse_denoise_dataset(const std::string& text,
                                     const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  auto next_line = [&]() {
    if (!std::getline(in, line)) fail("unexpected end of file");
    ++lineno;
  };

  next_line();
  std::istringstream hdr(line);
  std::string magic, ver;
  DenoiseDataset d;
  int num_train = 0, num_test = 0;
  hdr >> magic >> ver >> d.rows >> d.cols >> num_train >> num_test >>
      d.flip_prob >> d.seed;
  if (magic != "dset" || ver != "v1" || !hdr) fail("bad dataset header");

  auto read_grid = [&]() {
    Assignment img(static_cast<std::size_t>(d.rows) * d.cols, 0);
    for (int r = 0; r < d.rows; ++r) {
      next_line();
      if (static_cast<int>(line.size()) < d.cols) fail("grid row too short");
      for (int c = 0; c < d.cols; ++c) {
        if (line[c] != '0' && line[c] != '1') fail("grid cells must be 0/1");
        img[static_cast<std::size_t>(r) * d.cols + c] = line[c] - '0';
      }
    }
    return img;
  };

  next_line();
  if (line != "clean") fail("expected 'clean' section");
  d.clean = read_grid();
  for (int i = 0; i < num_train; ++i) {
    next_line();
    if (line != "train " + std::to_string(i)) fail("expected train section");
    LabeledExample ex;
    ex.x = read_grid();
    ex.y = d.clean;
    d.train.push_back(std::move(ex));
  }
  for (int i = 0; i < num_test; ++i) {
    next_line();
    if (line != "test " + std::to_string(i)) fail("expected test section");
    LabeledExample ex;
    ex.x = read_grid();
    ex.y = d.clean;
    d.test.push_back(std::move(ex));
  }
  return d;
}

std::string format_crf_params(const DenoiseFeatureMap& fm,
                              const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != fm.dim()) {
    throw std::invalid_argument("theta dimension mismatch");
  }
  std::ostringstream out;
  out << "crf v1 " << fm.rows() << ' ' << fm.cols() << "\n";
  const int p = fm.num_pixels();
  for (int i = 0; i < p; ++i) {
    out << "unary " << i << ' ' << format_value(theta[i]) << "\n";
  }
  const auto edges = grid_edges(fm.rows(), fm.cols());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out << "edge " << edges[e].first << ' ' << edges[e].second << ' '
        << format_value(theta[p + e]) << "\n";
  }
  return out.str();
}

}  // namespace pmap
