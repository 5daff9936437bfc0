#include <doctest.h>

#include <cmath>

#include "pmap/mapsolve.hpp"
#include "pmap/model.hpp"
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

// Two-spin Ising model in table form: theta_1 y_1 + theta_2 y_2 +
// theta_12 y_1 y_2 with spins -1/+1 as labels 0/1.
PairwiseModel two_spin(double t1, double t2, double t12) {
  auto u = [](double t) { return std::vector<double>{-t, t}; };
  return build_model({2, 2}, {u(t1), u(t2)},
                     {make_edge(0, 1, {t12, -t12, -t12, t12}, 2)});
}

}  // namespace

TEST_CASE("build_model validates and normalizes") {
  // empty model with two joint states
  const PairwiseModel m = build_model({2}, {{0.0, 0.0}}, {});
  CHECK(m.num_vars() == 1);
  CHECK(m.num_states() == 2);

  // shape mismatch: 2x3 table on binary cards
  CHECK_THROWS_AS(build_model({2, 2}, {{0, 0}, {0, 0}},
                              {make_edge(0, 1, {0, 0, 0, 0, 0, 0}, 3)}),
                  std::invalid_argument);

  // all four joint states excluded via unary markers
  CHECK_THROWS_AS(build_model({2, 2}, {{kForbidden, kForbidden}, {0, 0}}, {}),
                  std::invalid_argument);

  CHECK_THROWS_AS(build_model({2, 2}, {{0, 0}, {0, 0}},
                              {make_edge(0, 1, {0, 0, 0, 0}, 2),
                               make_edge(1, 0, {0, 0, 0, 0}, 2)}),
                  std::invalid_argument);  // duplicate after normalization

  CHECK_THROWS_AS(build_model({0}, {{}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(build_model({2}, {{std::nan(""), 0.0}}, {}),
                  std::invalid_argument);
}

TEST_CASE("score sums tables and absorbs exclusions") {
  const PairwiseModel single = build_model({2}, {{0.0, 1.0}}, {});
  CHECK(score(single, {1}) == 1.0);
  CHECK_THROWS_AS(score(single, {2}), std::out_of_range);

  const PairwiseModel ising = two_spin(0.5, -0.5, 1.0);
  CHECK(score(ising, {1, 1}) == doctest::Approx(1.0).epsilon(1e-15));

  const PairwiseModel excl =
      build_model({2, 2}, {{0.0, kForbidden}, {0.0, 0.0}}, {});
  CHECK(is_forbidden(score(excl, {1, 0})));
  CHECK(score(excl, {0, 0}) == 0.0);
}

TEST_CASE("score is invariant under edge-list permutation") {
  Rng rng(99);
  std::vector<Edge> edges;
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {0, 2}}) {
    std::vector<double> t(4);
    for (double& v : t) v = rng.uniform(-1, 1);
    edges.push_back(make_edge(i, j, t, 2));
  }
  std::vector<std::vector<double>> unary = {{0.1, -0.2}, {0.3, 0.4}, {-0.5, 0.6}};
  const PairwiseModel a = build_model({2, 2, 2}, unary, edges);
  std::swap(edges[0], edges[2]);
  const PairwiseModel b = build_model({2, 2, 2}, unary, edges);
  for (int s = 0; s < 8; ++s) {
    const Assignment y = {(s >> 2) & 1, (s >> 1) & 1, s & 1};
    CHECK(score(a, y) == score(b, y));  // bit exact: canonical edge order
  }
}

TEST_CASE("gen_spin_glass basics") {
  SpinGlassConfig cfg;
  cfg.rows = 2;
  cfg.cols = 2;
  cfg.field_strength = 0.0;
  cfg.coupling_strength = 1.0;
  cfg.seed = 5;
  const PairwiseModel m = gen_spin_glass(cfg);
  for (int i = 0; i < 4; ++i) {
    CHECK(m.unary(i)[0] == 0.0);
    CHECK(m.unary(i)[1] == 0.0);
  }

  SpinGlassConfig big;
  big.rows = 10;
  big.cols = 10;
  big.seed = 1;
  const PairwiseModel g = gen_spin_glass(big);
  CHECK(g.num_vars() == 100);
  CHECK(g.edges().size() == 180);

  // attractive tables are supermodular
  SpinGlassConfig att;
  att.rows = 3;
  att.cols = 3;
  att.coupling_strength = 1.0;
  att.mode = CouplingMode::Attractive;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    att.seed = seed;
    const PairwiseModel sm = gen_spin_glass(att);
    for (const Edge& e : sm.edges()) {
      CHECK(e.at(0, 0) + e.at(1, 1) >= e.at(0, 1) + e.at(1, 0));
      CHECK(edge_supermodular(e));
    }
  }
}

TEST_CASE("gen_spin_glass is a pure function of the config") {
  SpinGlassConfig cfg;
  cfg.rows = 3;
  cfg.cols = 4;
  cfg.field_strength = 1.0;
  cfg.coupling_strength = 2.0;
  cfg.mode = CouplingMode::Mixed;
  cfg.seed = 1234;
  const std::string a = format_model(gen_spin_glass(cfg));
  const std::string b = format_model(gen_spin_glass(cfg));
  CHECK(a == b);
  cfg.seed = 1235;
  CHECK(format_model(gen_spin_glass(cfg)) != a);
}

TEST_CASE("model file round trip is bit exact") {
  SpinGlassConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.mode = CouplingMode::Mixed;
  cfg.seed = 77;
  const PairwiseModel m = gen_spin_glass(cfg);
  const PairwiseModel r = parse_model(format_model(m));
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Assignment y(m.num_vars());
    for (int i = 0; i < m.num_vars(); ++i) {
      y[i] = static_cast<int>(rng.uniform01() * m.card(i));
    }
    CHECK(score(m, y) == score(r, y));
  }
  CHECK(format_model(r) == format_model(m));
}

TEST_CASE("model parser diagnostics") {
  CHECK_THROWS_WITH_AS(parse_model("pmodel v1 1\ncards 0\nunary 0\n", "f"),
                       doctest::Contains("f:2"), std::runtime_error);
  CHECK_THROWS_AS(parse_model("pmodel v2 1\ncards 2\nunary 0 0 0\n"),
                  std::runtime_error);

  const PairwiseModel m = parse_model(
      "pmodel v1 2\ncards 2 2\nunary 0 0 -inf\nunary 1 0 0\n"
      "edge 0 1 0 0 0 1.5\n");
  CHECK(is_forbidden(m.unary(0)[1]));
  CHECK(m.edges()[0].at(1, 1) == 1.5);
}

TEST_CASE("detect_grid recovers shapes") {
  SpinGlassConfig cfg;
  cfg.rows = 2;
  cfg.cols = 3;
  cfg.seed = 4;
  const auto g = detect_grid(gen_spin_glass(cfg));
  REQUIRE(g.has_value());
  CHECK(g->rows == 2);
  CHECK(g->cols == 3);

  // a path is reported with rows ascending, i.e. 1 x n
  SpinGlassConfig path;
  path.rows = 4;
  path.cols = 1;
  path.seed = 4;
  const auto p = detect_grid(gen_spin_glass(path));
  REQUIRE(p.has_value());
  CHECK(p->rows == 1);
  CHECK(p->cols == 4);

  const PairwiseModel tri = build_model(
      {2, 2, 2}, {{0, 0}, {0, 0}, {0, 0}},
      {make_edge(0, 1, {0, 0, 0, 0}, 2), make_edge(1, 2, {0, 0, 0, 0}, 2),
       make_edge(0, 2, {0, 0, 0, 0}, 2)});
  CHECK(!detect_grid(tri).has_value());
}
