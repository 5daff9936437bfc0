#include "pmap/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "pmap/parallel.hpp"

namespace pmap::oracle {

namespace {

// Fixed chunk size: the reduction tree must not depend on the thread count.
constexpr std::uint64_t kChunkStates = std::uint64_t(1) << 14;

void check_cap(const PairwiseModel& m, std::uint64_t cap) {
  if (m.num_states() > cap) {
    throw PreconditionError("state space too large for exhaustive oracle (" +
                            std::to_string(m.num_states()) + " > cap " +
                            std::to_string(cap) + ")");
  }
}

// Visit states [begin, end) in index order.
template <class F>
void scan_range(const PairwiseModel& m, std::uint64_t begin, std::uint64_t end,
                F&& f) {
  Assignment y;
  decode_state(m, begin, y);
  for (std::uint64_t s = begin; s < end; ++s) {
    f(s, static_cast<const Assignment&>(y), m.score_unchecked(y));
    for (int i = m.num_vars() - 1; i >= 0; --i) {
      if (++y[i] < m.card(i)) break;
      y[i] = 0;
    }
  }
}

std::uint64_t num_chunks(std::uint64_t states) {
  return (states + kChunkStates - 1) / kChunkStates;
}

}  // namespace

void decode_state(const PairwiseModel& m, std::uint64_t index, Assignment& y) {
  const int n = m.num_vars();
  y.assign(n, 0);
  for (int i = n - 1; i >= 0; --i) {
    const std::uint64_t c = static_cast<std::uint64_t>(m.card(i));
    y[i] = static_cast<int>(index % c);
    index /= c;
  }
}

void LogSumAcc::add(double x) {
  if (is_forbidden(x)) return;
  if (x <= max) {
    sum += std::exp(x - max);
  } else {
    sum = sum * std::exp(max - x) + 1.0;
    max = x;
  }
}

void LogSumAcc::merge(const LogSumAcc& o) {
  if (o.empty()) return;
  if (empty()) {
    *this = o;
    return;
  }
  if (o.max <= max) {
    sum += o.sum * std::exp(o.max - max);
  } else {
    sum = sum * std::exp(max - o.max) + o.sum;
    max = o.max;
  }
}

double LogSumAcc::value() const { return max + std::log(sum); }

double exact_log_partition(const PairwiseModel& m, std::uint64_t cap) {
  check_cap(m, cap);
  const std::uint64_t states = m.num_states();
  const std::uint64_t chunks = num_chunks(states);
  std::vector<LogSumAcc> acc(chunks);
  parallel_for(chunks, [&](std::size_t k) {
    const std::uint64_t b = k * kChunkStates;
    const std::uint64_t e = std::min(states, b + kChunkStates);
    scan_range(m, b, e, [&](std::uint64_t, const Assignment&, double s) {
      acc[k].add(s);
    });
  });
  LogSumAcc total;
  for (const LogSumAcc& a : acc) total.merge(a);
  if (total.empty()) throw std::runtime_error("empty domain: log Z undefined");
  return total.value();
}

MapSolution exact_map(const PairwiseModel& m, std::uint64_t cap) {
  check_cap(m, cap);
  const std::uint64_t states = m.num_states();
  const std::uint64_t chunks = num_chunks(states);
  struct Best {
    double value = kForbidden;
    std::uint64_t state = 0;
    bool found = false;
  };
  std::vector<Best> best(chunks);
  parallel_for(chunks, [&](std::size_t k) {
    const std::uint64_t b = k * kChunkStates;
    const std::uint64_t e = std::min(states, b + kChunkStates);
    scan_range(m, b, e, [&](std::uint64_t s, const Assignment&, double v) {
      if (is_forbidden(v)) return;
      // strict > keeps the first (lexicographically smallest) maximizer
      if (!best[k].found || v > best[k].value) {
        best[k] = {v, s, true};
      }
    });
  });
  Best total;
  for (const Best& b : best) {
    if (!b.found) continue;
    if (!total.found || b.value > total.value) total = b;
  }
  if (!total.found) throw std::runtime_error("empty domain: MAP undefined");
  MapSolution sol;
  decode_state(m, total.state, sol.assignment);
  sol.value = m.score_unchecked(sol.assignment);
  return sol;
}

Marginals exact_marginals(const PairwiseModel& m, std::uint64_t cap) {
  check_cap(m, cap);
  const double log_z = exact_log_partition(m, cap);
  const std::uint64_t states = m.num_states();
  const std::uint64_t chunks = num_chunks(states);
  const int n = m.num_vars();

  auto zero_tables = [&] {
    std::vector<std::vector<double>> t(n);
    for (int i = 0; i < n; ++i) t[i].assign(m.card(i), 0.0);
    return t;
  };
  std::vector<std::vector<std::vector<double>>> part(chunks);
  parallel_for(chunks, [&](std::size_t k) {
    part[k] = zero_tables();
    const std::uint64_t b = k * kChunkStates;
    const std::uint64_t e = std::min(states, b + kChunkStates);
    scan_range(m, b, e, [&](std::uint64_t, const Assignment& y, double s) {
      if (is_forbidden(s)) return;
      const double p = std::exp(s - log_z);
      for (int i = 0; i < n; ++i) part[k][i][y[i]] += p;
    });
  });
  Marginals out;
  out.prob = zero_tables();
  for (std::uint64_t k = 0; k < chunks; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < m.card(i); ++c) out.prob[i][c] += part[k][i][c];
    }
  }
  // Tidy the accumulated rounding so each table sums to one.
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (double p : out.prob[i]) s += p;
    for (double& p : out.prob[i]) p /= s;
  }
  return out;
}

namespace serial {

double exact_log_partition(const PairwiseModel& m, std::uint64_t cap) {
  check_cap(m, cap);
  LogSumAcc acc;
  for_each_state(m, [&](const Assignment&, double s) { acc.add(s); });
  if (acc.empty()) throw std::runtime_error("empty domain: log Z undefined");
  return acc.value();
}

MapSolution exact_map(const PairwiseModel& m, std::uint64_t cap) {
  check_cap(m, cap);
  MapSolution sol;
  bool found = false;
  for_each_state(m, [&](const Assignment& y, double v) {
    if (is_forbidden(v)) return;
    if (!found || v > sol.value) {
      sol.assignment = y;
      sol.value = v;
      found = true;
    }
  });
  if (!found) throw std::runtime_error("empty domain: MAP undefined");
  return sol;
}

Marginals exact_marginals(const PairwiseModel& m, std::uint64_t cap) {
  check_cap(m, cap);
  const double log_z = exact_log_partition(m, cap);
  Marginals out;
  out.prob.resize(m.num_vars());
  for (int i = 0; i < m.num_vars(); ++i) out.prob[i].assign(m.card(i), 0.0);
  for_each_state(m, [&](const Assignment& y, double s) {
    if (is_forbidden(s)) return;
    const double p = std::exp(s - log_z);
    for (int i = 0; i < m.num_vars(); ++i) out.prob[i][y[i]] += p;
  });
  for (auto& t : out.prob) {
    double s = 0.0;
    for (double p : t) s += p;
    for (double& p : t) p /= s;
  }
  return out;
}

}  // namespace serial

}  // namespace pmap::oracle
