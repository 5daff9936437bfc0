#include "pmap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pmap/oracle.hpp"
#include "pmap/parallel.hpp"

namespace pmap {

std::vector<std::vector<int>> PerturbationScheme::resolve(
    const PairwiseModel& m) const {
  switch (kind) {
    case Kind::Unary: {
      std::vector<std::vector<int>> s(m.num_vars());
      for (int i = 0; i < m.num_vars(); ++i) s[i] = {i};
      return s;
    }
    case Kind::FullJoint: {
      std::vector<int> all(m.num_vars());
      for (int i = 0; i < m.num_vars(); ++i) all[i] = i;
      return {all};
    }
    case Kind::Blocks: {
      auto s = subsets;
      for (auto& b : s) std::sort(b.begin(), b.end());
      return s;
    }
    case Kind::None:
      return {};
  }
  return {};
}

void PerturbationScheme::validate(const PairwiseModel& m) const {
  if (kind == Kind::None) {
    throw std::invalid_argument("zero-perturbation scheme is not a valid "
                                "perturbation family for the bounds");
  }
  if (kind != Kind::Blocks) return;
  std::vector<bool> covered(m.num_vars(), false);
  if (subsets.empty()) throw std::invalid_argument("empty subset family");
  for (const auto& b : subsets) {
    if (b.empty()) throw std::invalid_argument("empty subset in family");
    for (int v : b) {
      if (v < 0 || v >= m.num_vars()) {
        throw std::invalid_argument("subset references invalid variable " +
                                    std::to_string(v));
      }
      covered[v] = true;
    }
  }
  for (int i = 0; i < m.num_vars(); ++i) {
    if (!covered[i]) {
      throw std::invalid_argument("subset family does not cover variable " +
                                  std::to_string(i));
    }
  }
}

namespace {

std::size_t block_table_size(const PairwiseModel& m,
                             const std::vector<int>& block) {
  std::size_t s = 1;
  for (int v : block) s *= static_cast<std::size_t>(m.card(v));
  return s;
}

// Row-major index of y restricted to the block (lowest variable slowest).
std::size_t block_index(const std::vector<int>& block, const Assignment& y,
                        const PairwiseModel& m) {
  std::size_t idx = 0;
  for (int v : block) idx = idx * static_cast<std::size_t>(m.card(v)) + y[v];
  return idx;
}

// One scaled Gumbel table per subset, drawn in family order.
std::vector<std::vector<double>> draw_noise(
    const PairwiseModel& m, const std::vector<std::vector<int>>& blocks,
    double scale, Rng& rng) {
  std::vector<std::vector<double>> noise(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    noise[b].resize(block_table_size(m, blocks[b]));
    for (double& v : noise[b]) v = scale * rng.gumbel();
  }
  return noise;
}

bool foldable(const std::vector<std::vector<int>>& blocks) {
  for (const auto& b : blocks) {
    if (b.size() > 2) return false;
  }
  return true;
}

// Model copy with the noise tables folded into unary / edge potentials.
PairwiseModel fold_noise(const PairwiseModel& m,
                         const std::vector<std::vector<int>>& blocks,
                         const std::vector<std::vector<double>>& noise) {
  std::vector<int> cards = m.cards();
  std::vector<std::vector<double>> unary = m.unaries();
  std::vector<Edge> edges = m.edges();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    if (blk.size() == 1) {
      const int i = blk[0];
      for (int k = 0; k < cards[i]; ++k) unary[i][k] += noise[b][k];
    } else {
      const int i = blk[0], j = blk[1];
      auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) {
        return e.i == i && e.j == j;
      });
      if (it == edges.end()) {
        Edge e;
        e.i = i;
        e.j = j;
        e.cols = cards[j];
        e.table = noise[b];
        edges.push_back(std::move(e));
      } else {
        for (std::size_t k = 0; k < it->table.size(); ++k) {
          it->table[k] += noise[b][k];
        }
      }
    }
  }
  return build_model(std::move(cards), std::move(unary), std::move(edges));
}

// Enumeration fallback for unfoldable families; stream use matches
// estimate_logZ_full when the family is the single all-variables subset.
PerturbedSolve enumerate_perturbed(const PairwiseModel& m,
                                   const std::vector<std::vector<int>>& blocks,
                                   const std::vector<std::vector<double>>& noise) {
  PerturbedSolve out;
  bool found = false;
  oracle::for_each_state(m, [&](const Assignment& y, double s) {
    if (is_forbidden(s)) return;
    double total = s;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      total += noise[b][block_index(blocks[b], y, m)];
    }
    if (!found || total > out.value) {
      out.value = total;
      out.argmax = y;
      found = true;
    }
  });
  if (!found) throw std::runtime_error("empty domain");
  return out;
}

PerturbedSolve full_joint_perturbed(const PairwiseModel& m, double scale,
                                    Rng& rng) {
  PerturbedSolve out;
  bool found = false;
  oracle::for_each_state(m, [&](const Assignment& y, double s) {
    const double g = scale * rng.gumbel();  // one per state, excluded too
    if (is_forbidden(s)) return;
    const double total = s + g;
    if (!found || total > out.value) {
      out.value = total;
      out.argmax = y;
      found = true;
    }
  });
  if (!found) throw std::runtime_error("empty domain");
  return out;
}

}  // namespace

PerturbedSolve perturbed_map(const PairwiseModel& m,
                             const PerturbationScheme& scheme, double scale,
                             Rng& rng, SolveMethod method,
                             const MplpOptions& mplp_opts) {
  if (scheme.kind == PerturbationScheme::Kind::None) {
    MapResult r = solve_map(m, method, mplp_opts);
    return {r.value, std::move(r.assignment)};
  }
  if (scheme.kind == PerturbationScheme::Kind::FullJoint) {
    if (method != SolveMethod::Brute) {
      throw PreconditionError(
          "full-joint perturbations require the brute solver");
    }
    if (m.num_states() > oracle::kDefaultStateCap) {
      throw PreconditionError("full-joint perturbation needs an enumerable model");
    }
    return full_joint_perturbed(m, scale, rng);
  }
  scheme.validate(m);
  const auto blocks = scheme.resolve(m);
  if (method == SolveMethod::GraphCut) {
    for (const auto& b : blocks) {
      if (b.size() != 1) {
        throw PreconditionError(
            "graphcut accepts singleton perturbation subsets only");
      }
    }
  }
  const auto noise = draw_noise(m, blocks, scale, rng);
  if (foldable(blocks)) {
    const PairwiseModel perturbed = fold_noise(m, blocks, noise);
    MapResult r = solve_map(perturbed, method, mplp_opts);
    return {r.value, std::move(r.assignment)};
  }
  if (method != SolveMethod::Brute) {
    throw PreconditionError(
        "perturbation subsets of size > 2 require the brute solver");
  }
  return enumerate_perturbed(m, blocks, noise);
}

EstimateReport upper_bound_logZ(const PairwiseModel& m,
                                const PerturbationScheme& scheme,
                                SolveMethod method, std::size_t draws,
                                std::uint64_t seed,
                                const MplpOptions& mplp_opts) {
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  if (scheme.kind != PerturbationScheme::Kind::FullJoint) scheme.validate(m);
  std::vector<double> samples(draws);
  parallel_for(draws, [&](std::size_t j) {
    Rng rng(derive_seed(seed, j));
    samples[j] = perturbed_map(m, scheme, 1.0, rng, method, mplp_opts).value;
  });
  return make_report("upper_bound", seed, std::move(samples));
}

// ---------------------------------------------------------------------------

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 9; ++i) g.push_back(0.1 * i);
  return g;
}

double gumbel_cumulant(double lambda) {
  if (lambda >= 1.0) {
    throw std::invalid_argument("Gumbel cumulant diverges for lambda >= 1");
  }
  if (lambda == 0.0) return 0.0;
  return std::lgamma(1.0 - lambda) - lambda * kEulerGamma;
}

double logmeanexp(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("logmeanexp of empty sample");
  const double mx = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s) - std::log(static_cast<double>(xs.size()));
}

double logmeanexp_jackknife_se(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double mx = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  std::vector<double> loo(n);
  const double logn1 = std::log(static_cast<double>(n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    const double si = s - std::exp(xs[i] - mx);
    if (si > 0.0) {
      loo[i] = mx + std::log(si) - logn1;
    } else {
      // All mass sat on sample i; recompute the leave-one-out value exactly.
      double m2 = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        if (k != i) m2 = std::max(m2, xs[k]);
      }
      double s2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != i) s2 += std::exp(xs[k] - m2);
      }
      loo[i] = m2 + std::log(s2) - logn1;
    }
  }
  double mean = 0.0;
  for (double v : loo) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

EstimateReport lower_bound_logZ(const PairwiseModel& m,
                                const PerturbationScheme& scheme,
                                SolveMethod method,
                                const LowerBoundConfig& config,
                                std::uint64_t seed,
                                const MplpOptions& mplp_opts) {
  if (config.draws < 1) throw std::invalid_argument("need at least one draw");
  const auto& grid = config.lambda_grid;
  if (grid.empty()) throw std::invalid_argument("empty lambda grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] >= 1.0) {
      throw std::invalid_argument(
          "lambda grid values must lie in [0, 1): the cumulant diverges");
    }
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw std::invalid_argument("lambda grid must be strictly increasing");
    }
  }
  if (grid[0] != 0.0) throw std::invalid_argument("lambda grid must contain 0");
  if (scheme.kind != PerturbationScheme::Kind::FullJoint) scheme.validate(m);

  const std::size_t nblocks =
      scheme.kind == PerturbationScheme::Kind::FullJoint
          ? 1
          : scheme.resolve(m).size();

  const std::size_t L = grid.size();
  std::vector<std::vector<double>> draws(L);
  for (auto& d : draws) d.resize(config.draws);
  parallel_for(L * config.draws, [&](std::size_t flat) {
    const std::size_t l = flat / config.draws;
    const std::size_t j = flat % config.draws;
    Rng rng(derive_seed(seed, l, j));
    draws[l][j] = perturbed_map(m, scheme, grid[l], rng, method, mplp_opts).value;
  });

  EstimateReport r;
  r.estimator_id = "lower_bound";
  r.seed = seed;
  r.lambda_grid = grid;
  r.lambda_values.resize(L);
  r.lambda_se.resize(L);
  std::size_t best = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const double k = gumbel_cumulant(grid[l]);
    r.lambda_values[l] =
        logmeanexp(draws[l]) - static_cast<double>(nblocks) * k;
    r.lambda_se[l] = logmeanexp_jackknife_se(draws[l]);
    if (r.lambda_values[l] > r.lambda_values[best]) best = l;
  }
  r.best_lambda = grid[best];
  r.value = r.lambda_values[best];
  r.value_se = r.lambda_se[best];

  EstimateReport stats = make_report("", 0, draws[best]);
  r.samples = std::move(stats.samples);
  r.mean = stats.mean;
  r.std_error = stats.std_error;
  return r;
}

// ---------------------------------------------------------------------------

PairwiseModel build_inflated_model(const PairwiseModel& m,
                                   const InflationConfig& config, Rng& rng) {
  if (config.copies < 1) throw std::invalid_argument("copies must be >= 1");
  const int copies = config.copies;
  const double beta = config.beta();

  if (config.variant == InflationVariant::ExactAverage) {
    const int n = m.num_vars();
    const double inv_m = 1.0 / copies;
    const double inv_m2 = inv_m * inv_m;
    std::vector<int> cards(static_cast<std::size_t>(n) * copies);
    std::vector<std::vector<double>> unary(cards.size());
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < copies; ++a) {
        const int v = i * copies + a;
        cards[v] = m.card(i);
        unary[v].resize(m.card(i));
        for (int k = 0; k < m.card(i); ++k) {
          unary[v][k] = m.unary(i)[k] * inv_m + beta * rng.gumbel();
        }
      }
    }
    std::vector<Edge> edges;
    edges.reserve(m.edges().size() * static_cast<std::size_t>(copies) * copies);
    for (const Edge& e : m.edges()) {
      std::vector<double> table(e.table.size());
      for (std::size_t k = 0; k < table.size(); ++k) {
        table[k] = e.table[k] * inv_m2;
      }
      for (int a = 0; a < copies; ++a) {
        for (int b = 0; b < copies; ++b) {
          Edge ce;
          ce.i = e.i * copies + a;
          ce.j = e.j * copies + b;
          ce.cols = e.cols;
          ce.table = table;
          edges.push_back(std::move(ce));
        }
      }
    }
    return build_model(std::move(cards), std::move(unary), std::move(edges));
  }

  // TiledGrid
  const auto shape = detect_grid(m);
  if (!shape) {
    throw PreconditionError("tiled_grid inflation requires a grid model");
  }
  const int T = static_cast<int>(std::llround(std::sqrt(double(copies))));
  if (T * T != copies) {
    throw std::invalid_argument("tiled_grid requires a square copy count");
  }
  const int R = shape->rows, C = shape->cols;
  const int BR = R * T, BC = C * T;
  auto orig = [&](int r, int c) { return (r % R) * C + (c % C); };
  auto find_edge = [&](int i, int j) -> const Edge& {
    for (const Edge& e : m.edges()) {
      if (e.i == i && e.j == j) return e;
    }
    throw std::logic_error("grid edge lookup failed");
  };

  std::vector<int> cards(static_cast<std::size_t>(BR) * BC, 2);
  std::vector<std::vector<double>> unary(cards.size());
  for (int r = 0; r < BR; ++r) {
    for (int c = 0; c < BC; ++c) {
      const int v = r * BC + c;
      cards[v] = m.card(orig(r, c));
      unary[v].resize(cards[v]);
      for (int k = 0; k < cards[v]; ++k) {
        unary[v][k] = m.unary(orig(r, c))[k] + beta * rng.gumbel();
      }
    }
  }
  std::vector<Edge> edges;
  auto add_big_edge = [&](int u, int v, const Edge& src) {
    Edge e;
    e.i = u;
    e.j = v;
    e.cols = src.cols;
    e.table = src.table;
    edges.push_back(std::move(e));
  };
  for (int r = 0; r < BR; ++r) {
    for (int c = 0; c < BC; ++c) {
      const int v = r * BC + c;
      if (c + 1 < BC) {
        if ((c % C) + 1 < C) {
          add_big_edge(v, v + 1, find_edge(orig(r, c), orig(r, c) + 1));
        } else if (C >= 2) {
          // Seam: reuse the last horizontal edge of this original row.
          const int rr = r % R;
          add_big_edge(v, v + 1, find_edge(rr * C + C - 2, rr * C + C - 1));
        }
        // C == 1: the original has no horizontal couplings; tiles stay
        // uncoupled in this direction.
      }
      if (r + 1 < BR) {
        if ((r % R) + 1 < R) {
          add_big_edge(v, v + BC, find_edge(orig(r, c), orig(r, c) + C));
        } else if (R >= 2) {
          const int cc = c % C;
          add_big_edge(v, v + BC, find_edge((R - 2) * C + cc, (R - 1) * C + cc));
        }
      }
    }
  }
  return build_model(std::move(cards), std::move(unary), std::move(edges));
}

EstimateReport approx_logZ_inflation(const PairwiseModel& m,
                                     const InflationConfig& config,
                                     std::uint64_t seed) {
  if (config.reports < 1) throw std::invalid_argument("reports must be >= 1");
  std::vector<double> samples(config.reports);
  const double denom =
      config.variant == InflationVariant::TiledGrid ? config.copies : 1;
  parallel_for(static_cast<std::size_t>(config.reports), [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    const PairwiseModel inflated = build_inflated_model(m, config, rng);
    MapResult res = solve_map(inflated, config.solver, config.mplp);
    samples[r] = res.value / denom;
  });
  EstimateReport r = make_report(
      config.variant == InflationVariant::ExactAverage ? "inflation_exact"
                                                       : "inflation_tiled",
      seed, std::move(samples));
  return r;
}

}  // namespace pmap
