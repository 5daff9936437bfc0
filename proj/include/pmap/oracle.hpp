#pragma once
// Exhaustive-enumeration ground truth for small models: exact log partition
// function, MAP, and marginals.
//
// Enumeration order is row-major over label vectors with variable 0 slowest,
// i.e. state index order equals lexicographic order of the label vectors.
// The parallel implementations split the state space into fixed-size chunks
// and combine per-chunk results in chunk index order, so the result is the
// same for every thread count. The pmap::oracle::serial namespace keeps
// naive single-loop reference versions for tests and benchmarks.

#include <cstdint>
#include <vector>

#include "pmap/model.hpp"

namespace pmap::oracle {

inline constexpr std::uint64_t kDefaultStateCap = std::uint64_t(1) << 24;

struct Marginals {
  // prob[i][k] = p(y_i = k) under the Gibbs distribution.
  std::vector<std::vector<double>> prob;
};

struct MapSolution {
  Assignment assignment;
  double value = 0.0;
};

// log sum_{y in dom(phi)} exp(phi(y)), max-shifted. Throws PreconditionError
// if the state space exceeds the cap, std::runtime_error on empty domain.
double exact_log_partition(const PairwiseModel& m,
                           std::uint64_t cap = kDefaultStateCap);

// Maximizing assignment and its score; ties broken toward the
// lexicographically smallest label vector.
MapSolution exact_map(const PairwiseModel& m,
                      std::uint64_t cap = kDefaultStateCap);

Marginals exact_marginals(const PairwiseModel& m,
                          std::uint64_t cap = kDefaultStateCap);

// Decode a state index into labels (variable 0 slowest).
void decode_state(const PairwiseModel& m, std::uint64_t index, Assignment& y);

// Visit every joint state in enumeration order: f(y, score). Serial.
template <class F>
void for_each_state(const PairwiseModel& m, F&& f) {
  Assignment y(m.num_vars(), 0);
  const std::uint64_t total = m.num_states();
  for (std::uint64_t s = 0; s < total; ++s) {
    f(static_cast<const Assignment&>(y), m.score_unchecked(y));
    for (int i = m.num_vars() - 1; i >= 0; --i) {
      if (++y[i] < m.card(i)) break;
      y[i] = 0;
    }
  }
}

// Streaming max-shifted log-sum-exp accumulator. merge() applies a fixed
// left fold, so a chunked reduction is deterministic.
struct LogSumAcc {
  double max = kForbidden;
  double sum = 0.0;

  void add(double x);
  void merge(const LogSumAcc& o);
  bool empty() const { return sum == 0.0; }
  double value() const;  // max + log(sum)
};

namespace serial {
double exact_log_partition(const PairwiseModel& m,
                           std::uint64_t cap = kDefaultStateCap);
MapSolution exact_map(const PairwiseModel& m,
                      std::uint64_t cap = kDefaultStateCap);
Marginals exact_marginals(const PairwiseModel& m,
                          std::uint64_t cap = kDefaultStateCap);
}  // namespace serial

}  // namespace pmap::oracle
