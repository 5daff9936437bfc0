#pragma once
// OpenMP loop helpers. Every parallel loop in this codebase either writes to
// a preassigned slot per index or reduces over fixed-size chunks combined in
// index order, so results are bit-identical for any thread count (and for
// the non-OpenMP build).

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pmap {

// An exception escaping an OpenMP region would terminate the process, so the
// loop body is fenced and the first captured exception is rethrown after the
// join.
template <class F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
  std::exception_ptr err;
  std::mutex err_mu;
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace pmap
