#include <doctest.h>

#include <cmath>

#include "pmap/crf.hpp"
#include "pmap/oracle.hpp"
#include "pmap/rng.hpp"

using namespace pmap;

namespace {

// 1x2 denoising grid: theta = (pixel0, pixel1, edge), 4 joint states.
struct Toy {
  DenoiseFeatureMap fm{1, 2};
  Dataset data;
  Toy() { data.push_back({{0, 1}, {0, 0}}); }
};

std::vector<double> random_theta(Rng& rng, int d, double scale = 1.0) {
  std::vector<double> t(d);
  for (double& v : t) v = rng.uniform(-scale, scale);
  return t;
}

// One variable whose model leaves only label 0 feasible.
class SingleFeasibleMap : public FeatureMap {
 public:
  int dim() const override { return 1; }
  PairwiseModel build_model(std::span<const double> theta,
                            const Observation&) const override {
    return pmap::build_model({2}, {{theta[0], kForbidden}}, {});
  }
  void add_features(const Observation&, const Assignment& y, double w,
                    std::span<double> out) const override {
    out[0] += w * (y[0] == 0 ? 1.0 : 0.0);
  }
};

}  // namespace

TEST_CASE("zero-perturbation loss is the structured hinge and is nonnegative") {
  Toy toy;
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    CrfParams p{random_theta(rng, toy.fm.dim()), &toy.fm};
    const double loss = surrogate_loss(p, toy.data, PerturbationScheme::none(),
                                       1, 0, SolveMethod::Brute);
    CHECK(loss >= -1e-12);
  }
}

TEST_CASE("fixed-seed surrogate loss is convex (midpoint inequality)") {
  Toy toy;
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_theta(rng, toy.fm.dim(), 2.0);
    const auto b = random_theta(rng, toy.fm.dim(), 2.0);
    std::vector<double> mid(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
    const auto eval = [&](const std::vector<double>& th) {
      CrfParams p{th, &toy.fm};
      return surrogate_loss(p, toy.data, PerturbationScheme::unary(), 5, 77,
                            SolveMethod::Brute);
    };
    CHECK(eval(mid) <= 0.5 * (eval(a) + eval(b)) + 1e-9);
  }
}

TEST_CASE("surrogate loss upper-bounds the CRF loss in expectation") {
  Toy toy;
  CrfParams p{{0.4, -0.3, 0.6}, &toy.fm};
  const std::size_t m = 10000;
  const std::uint64_t seed = 5;

  // replicate the estimator's draws to get a standard error for the check
  const PairwiseModel model = toy.fm.build_model(p.theta, toy.data[0].x);
  const double base = model.score(toy.data[0].y);
  std::vector<double> totals(m);
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng(derive_seed(seed, 0, j));
    totals[j] =
        perturbed_map(model, PerturbationScheme::unary(), 1.0, rng,
                      SolveMethod::Brute)
            .value -
        base;
  }
  double mean = 0.0;
  for (double v : totals) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : totals) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (m - 1) / m);

  const double j_hat = surrogate_loss(p, toy.data, PerturbationScheme::unary(),
                                      m, seed, SolveMethod::Brute);
  CHECK(j_hat == doctest::Approx(mean).epsilon(1e-10));
  CHECK(j_hat >= exact_crf_loss(p, toy.data) - 3.0 * se);
}

TEST_CASE("gradient vanishes when the label is the only feasible assignment") {
  SingleFeasibleMap fm;
  Dataset data = {{{0}, {0}}};
  CrfParams p{{0.7}, &fm};
  const auto g = surrogate_gradient(p, data, PerturbationScheme::unary(), 50, 3,
                                    SolveMethod::Brute);
  CHECK(g.gradient[0] == 0.0);
  const double loss = surrogate_loss(p, data, PerturbationScheme::none(), 1, 0,
                                     SolveMethod::Brute);
  CHECK(loss == 0.0);
}

TEST_CASE("gradient is recomputable from the stored argmax frequencies") {
  Toy toy;
  CrfParams p{{0.2, 0.1, -0.4}, &toy.fm};
  const auto g = surrogate_gradient(p, toy.data, PerturbationScheme::unary(),
                                    200, 9, SolveMethod::Brute);
  std::vector<double> re(toy.fm.dim(), 0.0);
  for (std::size_t k = 0; k < toy.data.size(); ++k) {
    for (const auto& [a, c] : g.argmax_counts[k]) {
      toy.fm.add_features(toy.data[k].x, a, double(c) / g.draws, re);
    }
    toy.fm.add_features(toy.data[k].x, toy.data[k].y, -1.0, re);
  }
  for (int i = 0; i < toy.fm.dim(); ++i) {
    CHECK(g.gradient[i] == doctest::Approx(re[i]).epsilon(1e-12));
  }
}

TEST_CASE("full-joint gradient matches oracle moment matching") {
  Toy toy;
  CrfParams p{{0.3, -0.2, 0.4}, &toy.fm};
  const auto g = surrogate_gradient(p, toy.data, PerturbationScheme::full_joint(),
                                    20000, 21, SolveMethod::Brute);
  const auto exact = exact_crf_gradient(p, toy.data);
  const auto se = g.per_coordinate_se(p, toy.data);
  for (int i = 0; i < toy.fm.dim(); ++i) {
    CHECK(std::fabs(g.gradient[i] - exact[i]) <= 3.0 * se[i] + 1e-9);
  }
}

TEST_CASE("fixed-seed finite differences match the gradient away from ties") {
  Toy toy;
  Rng rng(31);
  const std::size_t m = 20;
  const std::uint64_t seed = 400;
  const double h = 1e-5;
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    const auto theta = random_theta(rng, toy.fm.dim(), 1.5);
    auto dir = random_theta(rng, toy.fm.dim(), 1.0);
    double norm = 0.0;
    for (double v : dir) norm += v * v;
    for (double& v : dir) v /= std::sqrt(norm);

    auto offset = [&](double t_) {
      std::vector<double> th = theta;
      for (std::size_t i = 0; i < th.size(); ++i) th[i] += t_ * dir[i];
      return th;
    };
    CrfParams plus{offset(h), &toy.fm};
    CrfParams minus{offset(-h), &toy.fm};
    const auto g_plus = surrogate_gradient(plus, toy.data,
                                           PerturbationScheme::unary(), m, seed,
                                           SolveMethod::Brute);
    const auto g_minus = surrogate_gradient(minus, toy.data,
                                            PerturbationScheme::unary(), m, seed,
                                            SolveMethod::Brute);
    // a tie inside [theta-h, theta+h] switches some draw's argmax; skip
    if (g_plus.argmax_counts != g_minus.argmax_counts) continue;
    ++checked;

    CrfParams mid{theta, &toy.fm};
    const auto g = surrogate_gradient(mid, toy.data, PerturbationScheme::unary(),
                                      m, seed, SolveMethod::Brute);
    const double j_plus = surrogate_loss(plus, toy.data,
                                         PerturbationScheme::unary(), m, seed,
                                         SolveMethod::Brute);
    const double j_minus = surrogate_loss(minus, toy.data,
                                          PerturbationScheme::unary(), m, seed,
                                          SolveMethod::Brute);
    const double fd = (j_plus - j_minus) / (2 * h);
    double gd = 0.0;
    for (int i = 0; i < toy.fm.dim(); ++i) gd += g.gradient[i] * dir[i];
    CHECK(std::fabs(fd - gd) <= 1e-4);
  }
  CHECK(checked >= 5);  // ties are measure zero; most points must survive
}

TEST_CASE("exact-gradient training descends to a stationary point") {
  DenoiseFeatureMap fm(1, 2);
  // three labelings of the same observation put the moment target strictly
  // inside the feature polytope, so the optimum is finite
  Dataset data;
  data.push_back({{0, 0}, {0, 0}});
  data.push_back({{0, 0}, {0, 1}});
  data.push_back({{0, 0}, {1, 0}});

  TrainConfig cfg;
  cfg.epochs = 4000;
  cfg.step = 0.2;
  cfg.sqrt_decay = false;
  cfg.exact_gradient = true;
  const TrainResult r = train(fm, data, PerturbationScheme::none(), cfg);

  double prev = r.history.front().loss;
  bool reached = false;
  for (const EpochRecord& e : r.history) {
    CHECK(e.loss <= prev + 1e-10);
    prev = e.loss;
    if (e.grad_norm < 1e-6) {
      reached = true;
      break;
    }
  }
  CHECK(reached);
}

TEST_CASE("training runs with the degenerate zero-perturbation scheme") {
  const DenoiseDataset data = gen_denoise_dataset(4, 4, 2, 1, 0.1, 5);
  DenoiseFeatureMap fm(4, 4);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.step = 0.2;
  cfg.nonneg_range = fm.pairwise_range();
  const TrainResult r = train(fm, data.train, PerturbationScheme::none(), cfg);
  CHECK(r.history.size() == 5);
  CHECK(r.params.theta.size() == static_cast<std::size_t>(fm.dim()));
}

TEST_CASE("denoise dataset generation") {
  const DenoiseDataset clean = gen_denoise_dataset(8, 8, 3, 2, 0.0, 7);
  for (const auto& ex : clean.train) {
    CHECK(ex.x == Observation(clean.clean.begin(), clean.clean.end()));
  }

  const DenoiseDataset d = gen_denoise_dataset(16, 16, 10, 0, 0.1, 8);
  double flipped = 0.0;
  for (const auto& ex : d.train) {
    for (std::size_t i = 0; i < ex.x.size(); ++i) {
      flipped += ex.x[i] != d.clean[i] ? 1.0 : 0.0;
    }
  }
  flipped /= 10.0 * 256.0;
  CHECK(std::fabs(flipped - 0.1) <= 0.02);

  const DenoiseDataset again = gen_denoise_dataset(16, 16, 10, 0, 0.1, 8);
  CHECK(format_denoise_dataset(again) == format_denoise_dataset(d));

  CHECK_THROWS_AS(gen_denoise_dataset(4, 4, 1, 1, 0.5, 0), std::invalid_argument);

  // the silhouette has both foreground and background at training scales
  const Assignment img = silhouette_image(16, 16);
  int fg = 0;
  for (int v : img) fg += v;
  CHECK(fg > 16);
  CHECK(fg < 240);
}

TEST_CASE("dataset serialization round trip") {
  const DenoiseDataset d = gen_denoise_dataset(6, 5, 2, 2, 0.2, 9);
  const DenoiseDataset r = parse_denoise_dataset(format_denoise_dataset(d));
  CHECK(format_denoise_dataset(r) == format_denoise_dataset(d));
  CHECK(r.train.size() == 2);
  CHECK(r.test[1].x == d.test[1].x);
}

TEST_CASE("pixel_error of an observation-copying decoder is the flip rate") {
  const DenoiseDataset d = gen_denoise_dataset(8, 8, 2, 4, 0.1, 10);
  DenoiseFeatureMap fm(8, 8);
  std::vector<double> theta(fm.dim(), 0.0);
  for (int i = 0; i < fm.num_pixels(); ++i) theta[i] = 1.0;
  CrfParams p{theta, &fm};

  double flips = 0.0;
  for (const auto& ex : d.test) {
    for (std::size_t i = 0; i < ex.x.size(); ++i) {
      flips += ex.x[i] != d.clean[i] ? 1.0 : 0.0;
    }
  }
  flips /= 4.0 * 64.0;
  CHECK(pixel_error(p, d.test, SolveMethod::GraphCut) ==
        doctest::Approx(flips).epsilon(1e-12));

  // strong model on noiseless data decodes perfectly
  const DenoiseDataset c0 = gen_denoise_dataset(8, 8, 1, 3, 0.0, 11);
  CHECK(pixel_error(p, c0.test, SolveMethod::GraphCut) == 0.0);
}

TEST_CASE("crf parameter serialization") {
  DenoiseFeatureMap fm(2, 3);
  std::vector<double> theta(fm.dim());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = 0.25 * i;
  const std::string text = format_crf_params(fm, theta);
  CHECK(text.find("crf v1 2 3") == 0);
  CHECK(text.find("edge 0 1 ") != std::string::npos);
}
