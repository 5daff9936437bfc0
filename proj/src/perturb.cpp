#include "pmap/perturb.hpp"

#include <cmath>
#include <stdexcept>

#include "pmap/parallel.hpp"

namespace pmap {

std::vector<double> sample_gumbel(const GumbelSampler& sampler,
                                  std::size_t count) {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  Rng rng(sampler.seed);
  std::vector<double> out(count);
  for (double& v : out) v = rng.gumbel();
  return out;
}

EstimateReport make_report(std::string estimator_id, std::uint64_t seed,
                           std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("report needs >= 1 sample");
  EstimateReport r;
  r.estimator_id = std::move(estimator_id);
  r.seed = seed;
  r.samples = std::move(samples);
  double s = 0.0;
  for (double v : r.samples) s += v;
  r.mean = s / static_cast<double>(r.samples.size());
  if (r.samples.size() > 1) {
    double ss = 0.0;
    for (double v : r.samples) ss += (v - r.mean) * (v - r.mean);
    const double var = ss / static_cast<double>(r.samples.size() - 1);
    r.std_error = std::sqrt(var / static_cast<double>(r.samples.size()));
  }
  r.value = r.mean;
  r.value_se = r.std_error;
  return r;
}

namespace {

// Scores of every joint state in enumeration order.
std::vector<double> state_scores(const PairwiseModel& m, std::uint64_t cap) {
  if (m.num_states() > cap) {
    throw PreconditionError("state space too large to enumerate (" +
                            std::to_string(m.num_states()) + ")");
  }
  std::vector<double> phi;
  phi.reserve(m.num_states());
  oracle::for_each_state(
      m, [&](const Assignment&, double s) { phi.push_back(s); });
  return phi;
}

}  // namespace

EstimateReport estimate_logZ_full(const PairwiseModel& m, std::size_t draws,
                                  std::uint64_t seed, std::uint64_t cap) {
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  const std::vector<double> phi = state_scores(m, cap);
  bool any = false;
  for (double v : phi) any |= !is_forbidden(v);
  if (!any) throw std::runtime_error("empty domain");

  std::vector<double> samples(draws);
  parallel_for(draws, [&](std::size_t j) {
    Rng rng(derive_seed(seed, j));
    double best = kForbidden;
    for (double v : phi) {
      const double g = rng.gumbel();  // drawn for every state, excluded too
      if (is_forbidden(v)) continue;
      const double x = v + g;
      if (x > best) best = x;
    }
    samples[j] = best;
  });
  return make_report("full", seed, std::move(samples));
}

double estimate_logZ_sequential(const PairwiseModel& m,
                                std::size_t m_per_level, std::uint64_t seed) {
  if (m_per_level < 1) throw std::invalid_argument("m_per_level must be >= 1");
  const int n = m.num_vars();
  if (n > 6) throw PreconditionError("sequential demonstrator limited to n <= 6");
  for (int c : m.cards()) {
    if (c > 3) throw PreconditionError("sequential demonstrator limited to cards <= 3");
  }

  // cur[p] = phi_hat_level over prefixes of length `level`, prefix index
  // row-major (variable 0 slowest). Start at level n with the raw scores.
  std::vector<double> cur;
  cur.reserve(m.num_states());
  oracle::for_each_state(m,
                         [&](const Assignment&, double s) { cur.push_back(s); });

  for (int level = n; level >= 1; --level) {
    const int c = m.card(level - 1);
    const std::size_t prefixes = cur.size() / static_cast<std::size_t>(c);
    std::vector<double> next(prefixes);
    std::vector<double> noise(c);
    for (std::size_t p = 0; p < prefixes; ++p) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(level), p));
      const double* child = &cur[p * c];
      double acc = 0.0;
      bool all_excluded = true;
      for (int k = 0; k < c; ++k) all_excluded &= is_forbidden(child[k]);
      for (std::size_t j = 0; j < m_per_level; ++j) {
        for (int k = 0; k < c; ++k) noise[k] = rng.gumbel();
        double best = kForbidden;
        for (int k = 0; k < c; ++k) {
          if (is_forbidden(child[k])) continue;
          const double x = child[k] + noise[k];
          if (x > best) best = x;
        }
        acc += best;
      }
      next[p] = all_excluded ? kForbidden
                             : acc / static_cast<double>(m_per_level);
    }
    cur = std::move(next);
  }
  return cur[0];
}

EmpiricalJoint gibbs_via_argmax(const PairwiseModel& m, std::size_t draws,
                                std::uint64_t seed, std::uint64_t cap) {
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  const std::vector<double> phi = state_scores(m, cap);
  bool any = false;
  for (double v : phi) any |= !is_forbidden(v);
  if (!any) throw std::runtime_error("empty domain");

  std::vector<std::uint64_t> arg(draws);
  parallel_for(draws, [&](std::size_t j) {
    Rng rng(derive_seed(seed, j));
    double best = kForbidden;
    std::uint64_t best_s = 0;
    bool found = false;
    for (std::uint64_t s = 0; s < phi.size(); ++s) {
      const double g = rng.gumbel();
      if (is_forbidden(phi[s])) continue;
      const double x = phi[s] + g;
      if (!found || x > best) {
        best = x;
        best_s = s;
        found = true;
      }
    }
    arg[j] = best_s;
  });

  EmpiricalJoint out;
  out.freq.assign(phi.size(), 0.0);
  out.draws = draws;
  for (std::uint64_t s : arg) out.freq[s] += 1.0;
  for (double& f : out.freq) f /= static_cast<double>(draws);
  return out;
}

std::vector<double> gibbs_joint(const PairwiseModel& m, std::uint64_t cap) {
  const std::vector<double> phi = state_scores(m, cap);
  const double log_z = oracle::exact_log_partition(m, cap);
  std::vector<double> p(phi.size(), 0.0);
  for (std::size_t s = 0; s < phi.size(); ++s) {
    p[s] = is_forbidden(phi[s]) ? 0.0 : std::exp(phi[s] - log_z);
  }
  return p;
}

double total_variation(const std::vector<double>& p,
                       const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::fabs(p[i] - q[i]);
  return 0.5 * d;
}

}  // namespace pmap
