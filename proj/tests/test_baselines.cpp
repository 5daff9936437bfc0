#include <doctest.h>

#include <cmath>

#include "pmap/baselines.hpp"
#include "pmap/oracle.hpp"
#include "pmap/rng.hpp"

using namespace pmap;

namespace {

Edge make_edge(int i, int j, std::vector<double> table, int cols) {
  Edge e;
  e.i = i;
  e.j = j;
  e.cols = cols;
  e.table = std::move(table);
  return e;
}

PairwiseModel random_chain(int n, Rng& rng) {
  std::vector<int> cards(n, 2);
  std::vector<std::vector<double>> unary(n);
  for (auto& u : unary) u = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) {
    edges.push_back(make_edge(i, i + 1,
                              {rng.uniform(-1, 1), rng.uniform(-1, 1),
                               rng.uniform(-1, 1), rng.uniform(-1, 1)},
                              2));
  }
  return build_model(cards, unary, edges);
}

PairwiseModel spin_glass(int rows, int cols, double f, double c,
                         CouplingMode mode, std::uint64_t seed) {
  SpinGlassConfig cfg;
  cfg.rows = rows;
  cfg.cols = cols;
  cfg.field_strength = f;
  cfg.coupling_strength = c;
  cfg.mode = mode;
  cfg.seed = seed;
  return gen_spin_glass(cfg);
}

double factorized_log_z(const PairwiseModel& m) {
  double s = 0.0;
  for (int i = 0; i < m.num_vars(); ++i) {
    double z = 0.0;
    for (double v : m.unary(i)) z += std::exp(v);
    s += std::log(z);
  }
  return s;
}

}  // namespace

TEST_CASE("BP is exact on chains and single variables") {
  Rng rng(301);
  BpOptions opts;
  opts.tol = 1e-13;
  for (int t = 0; t < 5; ++t) {
    const PairwiseModel m = random_chain(5, rng);
    const BpResult r = bp_log_partition(m, opts);
    CHECK(r.converged);
    CHECK(r.log_z == doctest::Approx(oracle::exact_log_partition(m)).epsilon(1e-8));
  }

  const PairwiseModel one = build_model({3}, {{0.2, -1.0, 0.5}}, {});
  const BpResult r1 = bp_log_partition(one);
  CHECK(r1.log_z ==
        doctest::Approx(oracle::exact_log_partition(one)).epsilon(1e-10));
}

TEST_CASE("BP on a zero-coupling grid factorizes") {
  const PairwiseModel m = spin_glass(3, 3, 1.0, 0.0, CouplingMode::Attractive, 5);
  BpOptions opts;
  opts.check_beliefs = true;
  const BpResult r = bp_log_partition(m, opts);
  CHECK(r.converged);
  CHECK(r.log_z == doctest::Approx(factorized_log_z(m)).epsilon(1e-8));
}

TEST_CASE("TRBP reduces to BP on trees with unit appearance") {
  Rng rng(302);
  BpOptions opts;
  opts.tol = 1e-13;
  for (int t = 0; t < 5; ++t) {
    const PairwiseModel m = random_chain(6, rng);
    const EdgeAppearance rho = uniform_spanning_edge_probs(m);
    for (double r : rho.rho) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
    const BpResult r = trbp_log_partition(m, rho, opts);
    CHECK(r.converged);
    CHECK(r.log_z == doctest::Approx(oracle::exact_log_partition(m)).epsilon(1e-8));
  }
}

TEST_CASE("converged TRBP upper-bounds the oracle on grids") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const PairwiseModel m =
        spin_glass(3, 3, 1.0, 1.0,
                   seed % 2 ? CouplingMode::Mixed : CouplingMode::Attractive,
                   seed);
    const BpResult r = trbp_log_partition(m, uniform_spanning_edge_probs(m));
    if (!r.converged) continue;
    CHECK(r.log_z >= oracle::exact_log_partition(m) - 1e-6);
  }
}

TEST_CASE("TRBP at zero coupling factorizes") {
  const PairwiseModel m = spin_glass(3, 3, 1.0, 0.0, CouplingMode::Mixed, 6);
  const BpResult r = trbp_log_partition(m, uniform_spanning_edge_probs(m));
  CHECK(r.converged);
  CHECK(r.log_z == doctest::Approx(factorized_log_z(m)).epsilon(1e-8));
}

TEST_CASE("uniform spanning tree edge probabilities") {
  // triangle: three spanning trees, each edge in two of them
  const PairwiseModel tri = build_model(
      {2, 2, 2}, {{0, 0}, {0, 0}, {0, 0}},
      {make_edge(0, 1, {0, 0, 0, 0}, 2), make_edge(1, 2, {0, 0, 0, 0}, 2),
       make_edge(0, 2, {0, 0, 0, 0}, 2)});
  const EdgeAppearance rho = uniform_spanning_edge_probs(tri);
  for (double r : rho.rho) CHECK(r == doctest::Approx(2.0 / 3).epsilon(1e-9));

  // 10x10 grid: sum of appearance probabilities is n - 1
  const PairwiseModel grid = spin_glass(10, 10, 1, 1, CouplingMode::Mixed, 7);
  const EdgeAppearance rg = uniform_spanning_edge_probs(grid);
  double sum = 0.0;
  for (double r : rg.rho) {
    CHECK(r > 0.0);
    CHECK(r <= 1.0);
    sum += r;
  }
  CHECK(sum == doctest::Approx(99.0).epsilon(1e-8));

  // disconnected graphs are rejected
  const PairwiseModel disc = build_model({2, 2}, {{0, 0}, {0, 0}}, {});
  CHECK_THROWS_AS(uniform_spanning_edge_probs(disc), std::invalid_argument);
}

TEST_CASE("edge appearance sums to n-1 on random connected graphs") {
  Rng rng(303);
  for (int t = 0; t < 5; ++t) {
    const int n = 6;
    std::vector<Edge> edges;
    // random spanning tree plus extras
    for (int v = 1; v < n; ++v) {
      const int p = static_cast<int>(rng.uniform01() * v);
      edges.push_back(make_edge(std::min(p, v), std::max(p, v), {0, 0, 0, 0}, 2));
    }
    for (int k = 0; k < 4; ++k) {
      const int a = static_cast<int>(rng.uniform01() * n);
      const int b = static_cast<int>(rng.uniform01() * n);
      if (a == b) continue;
      bool dup = false;
      for (const Edge& e : edges) {
        if (e.i == std::min(a, b) && e.j == std::max(a, b)) dup = true;
      }
      if (!dup) {
        edges.push_back(make_edge(std::min(a, b), std::max(a, b), {0, 0, 0, 0}, 2));
      }
    }
    const PairwiseModel m = build_model(std::vector<int>(n, 2),
                                        std::vector<std::vector<double>>(n, {0, 0}),
                                        edges);
    const EdgeAppearance rho = uniform_spanning_edge_probs(m);
    double sum = 0.0;
    for (double r : rho.rho) sum += r;
    CHECK(sum == doctest::Approx(n - 1.0).epsilon(1e-9));
  }
}

TEST_CASE("BP reports non-convergence instead of failing") {
  // strong mixed couplings frustrate plain BP; the call must still return
  const PairwiseModel m = spin_glass(4, 4, 0.1, 3.0, CouplingMode::Mixed, 13);
  BpOptions opts;
  opts.max_iters = 50;
  opts.damping = 0.0;
  const BpResult r = bp_log_partition(m, opts);
  CHECK(std::isfinite(r.log_z));
}

TEST_CASE("excluded entries are clamped and flagged") {
  const PairwiseModel m = build_model(
      {2, 2}, {{0, 0}, {0, 0}},
      {make_edge(0, 1, {0, kForbidden, 0, 0}, 2)});
  const BpResult r = bp_log_partition(m);
  CHECK(r.forbidden_clamped);
  CHECK(r.log_z == doctest::Approx(std::log(3.0)).epsilon(1e-6));
}
