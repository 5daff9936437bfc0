#pragma once
// Gumbel perturbations and the exact (exponential-size) identities: the
// full-dimensional estimator, the iterated expectation-maximization
// demonstrator, and Gibbs sampling via perturbed argmax.
//
// Per-state noise gamma(y) is always indexed in the oracle's row-major state
// order. Draw j of any estimator uses the derived seed derive_seed(seed, j),
// so sample loops are embarrassingly parallel and bit-reproducible.

#include <cstdint>
#include <string>
#include <vector>

#include "pmap/model.hpp"
#include "pmap/oracle.hpp"
#include "pmap/rng.hpp"

namespace pmap {

struct GumbelSampler {
  std::uint64_t seed = 0;
};

// count i.i.d. zero-mean Gumbel draws.
std::vector<double> sample_gumbel(const GumbelSampler& sampler,
                                  std::size_t count);

// Monte-Carlo report for one estimator run. mean and std_error are always
// the plain sample statistics of `samples`; `value` is the headline estimate
// (equal to mean unless an estimator documents otherwise, e.g. the lower
// bound) and `value_se` its uncertainty.
struct EstimateReport {
  std::string estimator_id;
  std::uint64_t seed = 0;
  std::vector<double> samples;
  double mean = 0.0;
  double std_error = 0.0;  // sample stdev / sqrt(m)
  double value = 0.0;
  double value_se = 0.0;

  // Lower-bound extras: the lambda grid with per-lambda bound values and
  // jackknife standard errors; empty for other estimators.
  std::vector<double> lambda_grid;
  std::vector<double> lambda_values;
  std::vector<double> lambda_se;
  double best_lambda = 0.0;

  std::size_t m() const { return samples.size(); }
};

EstimateReport make_report(std::string estimator_id, std::uint64_t seed,
                           std::vector<double> samples);

// m i.i.d. draws of max_{y in dom(phi)} { phi(y) + gamma(y) } with one fresh
// Gumbel per joint state; the mean estimates log Z without bias (Gumbel
// max-stability). Requires an enumerable state space.
EstimateReport estimate_logZ_full(const PairwiseModel& m, std::size_t draws,
                                  std::uint64_t seed,
                                  std::uint64_t cap = oracle::kDefaultStateCap);

// Iterated expectation-maximization demonstrator: each expectation in
//   log Z = E max ... E max { phi(y) + sum_i gamma_i(y_i) }
// is replaced by an m_per_level-sample average, innermost first. The draws
// for level i under label prefix p come from derive_seed(seed, level, p), so
// each branch sees an independent, reproducible stream. Restricted to tiny
// models (n <= 6, cards <= 3).
double estimate_logZ_sequential(const PairwiseModel& m,
                                std::size_t m_per_level, std::uint64_t seed);

// Empirical distribution of argmax_y { phi(y) + gamma(y) } over full
// perturbation draws; frequencies estimate the Gibbs distribution.
struct EmpiricalJoint {
  std::vector<double> freq;  // by state index
  std::uint64_t draws = 0;
};

EmpiricalJoint gibbs_via_argmax(const PairwiseModel& m, std::size_t draws,
                                std::uint64_t seed,
                                std::uint64_t cap = oracle::kDefaultStateCap);

// Exact Gibbs probabilities by state index (enumeration; shares the cap).
std::vector<double> gibbs_joint(const PairwiseModel& m,
                                std::uint64_t cap = oracle::kDefaultStateCap);

double total_variation(const std::vector<double>& p,
                       const std::vector<double>& q);

}  // namespace pmap
