#include <doctest.h>

#include <cmath>

#include "pmap/mapsolve.hpp"
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

}  // namespace

TEST_CASE("solve_map dispatch and contracts") {
  SpinGlassConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.mode = CouplingMode::Mixed;
  cfg.seed = 31;
  const PairwiseModel m = gen_spin_glass(cfg);

  const MapResult b = solve_map(m, SolveMethod::Brute);
  const auto sol = oracle::exact_map(m);
  CHECK(b.value == sol.value);
  CHECK(b.assignment == sol.assignment);

  CHECK_THROWS_AS(solve_map(m, SolveMethod::GraphCut), PreconditionError);

  const MapResult r = solve_map(m, SolveMethod::Mplp);
  REQUIRE(r.dual_bound.has_value());
  CHECK(r.value <= *r.dual_bound + 1e-9);
  CHECK(r.value == score(m, r.assignment));
}

TEST_CASE("graphcut equals brute on attractive spin glasses") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    SpinGlassConfig cfg;
    cfg.rows = 4;
    cfg.cols = 4;
    cfg.field_strength = 1.0;
    cfg.coupling_strength = 1.5;
    cfg.mode = CouplingMode::Attractive;
    cfg.seed = seed;
    const PairwiseModel m = gen_spin_glass(cfg);
    const auto sol = oracle::exact_map(m);
    const MapResult r = graphcut_map(m);
    CHECK(r.value == sol.value);
  }
}

TEST_CASE("graphcut special cases") {
  // zero couplings: per-variable unary argmax
  const PairwiseModel f = build_model(
      {2, 2}, {{0.4, -0.1}, {-0.3, 0.8}}, {make_edge(0, 1, {0, 0, 0, 0}, 2)});
  const MapResult r = graphcut_map(f);
  CHECK(r.assignment == Assignment{0, 1});
  CHECK(r.value == doctest::Approx(1.2).epsilon(1e-15));

  // f = 0, c = 1 attractive: any constant labeling is optimal, value is the
  // sum of the couplings
  SpinGlassConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.field_strength = 0.0;
  cfg.coupling_strength = 1.0;
  cfg.mode = CouplingMode::Attractive;
  cfg.seed = 8;
  const PairwiseModel m = gen_spin_glass(cfg);
  double coupling_sum = 0.0;
  for (const Edge& e : m.edges()) coupling_sum += e.at(0, 0);
  const MapResult rc = graphcut_map(m);
  CHECK(rc.value == doctest::Approx(coupling_sum).epsilon(1e-12));
  const int l0 = rc.assignment[0];
  for (int l : rc.assignment) CHECK(l == l0);
}

TEST_CASE("graphcut handles excluded anti-diagonal entries") {
  // the edge forces agreement; unary pulls the pair to (1,1)
  const PairwiseModel m = build_model(
      {2, 2}, {{0.0, 0.6}, {0.5, 0.0}},
      {make_edge(0, 1, {0.2, kForbidden, kForbidden, 0.1}, 2)});
  const auto sol = oracle::exact_map(m);
  const MapResult r = graphcut_map(m);
  CHECK(r.value == sol.value);
  CHECK(!is_forbidden(r.value));
}

TEST_CASE("graphcut shift invariance") {
  SpinGlassConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.mode = CouplingMode::Attractive;
  cfg.seed = 12;
  const PairwiseModel m = gen_spin_glass(cfg);
  const MapResult base = graphcut_map(m);

  auto unary = m.unaries();
  const double delta = 1.75;
  for (double& v : unary[4]) v += delta;
  const PairwiseModel shifted = build_model(m.cards(), unary, m.edges());
  const MapResult r = graphcut_map(shifted);
  CHECK(r.assignment == base.assignment);
  CHECK(r.value - base.value == doctest::Approx(delta).epsilon(1e-12));
}

TEST_CASE("mplp is tight on trees") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const PairwiseModel m = random_chain(5, rng);
    const auto sol = oracle::exact_map(m);
    MplpTrace trace;
    const MapResult r = mplp_map(m, {1000, 1e-8}, &trace);
    REQUIRE(r.dual_bound.has_value());
    CHECK(r.value == doctest::Approx(sol.value).epsilon(1e-6));
    CHECK(*r.dual_bound == doctest::Approx(sol.value).epsilon(1e-6));
  }
}

TEST_CASE("mplp converges to the unary argmax without couplings") {
  const PairwiseModel f = build_model(
      {2, 3}, {{0.4, -0.1}, {0.1, 0.9, 0.2}},
      {make_edge(0, 1, {0, 0, 0, 0, 0, 0}, 3)});
  MplpTrace trace;
  const MapResult r = mplp_map(f, {100, 1e-10}, &trace);
  CHECK(r.assignment == Assignment{0, 1});
  CHECK(trace.converged);
  CHECK(r.iterations <= 3);
}

TEST_CASE("mplp dual is a monotone upper bound on mixed grids") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    SpinGlassConfig cfg;
    cfg.rows = 4;
    cfg.cols = 4;
    cfg.field_strength = 1.0;
    cfg.coupling_strength = 1.0;
    cfg.mode = CouplingMode::Mixed;
    cfg.seed = seed;
    const PairwiseModel m = gen_spin_glass(cfg);
    const auto sol = oracle::exact_map(m);
    MplpTrace trace;
    const MapResult r = mplp_map(m, {300, 1e-8}, &trace);
    REQUIRE(r.dual_bound.has_value());
    CHECK(r.value <= sol.value + 1e-12);
    CHECK(sol.value <= *r.dual_bound + 1e-9);
    for (std::size_t s = 1; s < trace.dual_per_sweep.size(); ++s) {
      CHECK(trace.dual_per_sweep[s] <= trace.dual_per_sweep[s - 1] + 1e-9);
    }
  }
}

TEST_CASE("mplp decode ties break toward the lowest label") {
  // symmetric potentials: every assignment scores zero
  const PairwiseModel m = build_model(
      {2, 2}, {{0.0, 0.0}, {0.0, 0.0}}, {make_edge(0, 1, {0, 0, 0, 0}, 2)});
  const MapResult r = mplp_map(m);
  CHECK(r.assignment == Assignment{0, 0});
}
