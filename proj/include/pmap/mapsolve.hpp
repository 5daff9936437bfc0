#pragma once
// MAP solvers behind a single interface: exhaustive search, graph-cut via
// max-flow for binary supermodular models, and MPLP-style dual coordinate
// descent for general pairwise models.

#include <optional>
#include <string>
#include <vector>

#include "pmap/maxflow.hpp"
#include "pmap/model.hpp"

namespace pmap {

enum class SolveMethod { Brute, GraphCut, Mplp };

SolveMethod parse_solve_method(const std::string& name);
std::string solve_method_name(SolveMethod m);

struct MplpOptions {
  int max_iters = 1000;
  double tol = 1e-8;  // stop when the dual decrease per sweep falls below
};

struct MapResult {
  Assignment assignment;
  double value = 0.0;  // always recomputed as score(model, assignment)
  std::optional<double> dual_bound;  // MPLP only; >= true MAP value
  std::string solver_id;
  int iterations = 0;
};

// table(0,0) + table(1,1) >= table(0,1) + table(1,0), with excluded
// anti-diagonal entries allowed (they only strengthen the inequality).
bool edge_supermodular(const Edge& e);
// All cards 2, every edge supermodular, diagonal entries finite.
bool graphcut_eligible(const PairwiseModel& m);

MapResult brute_map(const PairwiseModel& m);

// Exact MAP for binary supermodular models via the standard energy-to-cut
// reduction. Excluded anti-diagonal / unary entries become hard arcs.
MapResult graphcut_map(const PairwiseModel& m);

// Edge-based MPLP (pairwise LP-relaxation dual, block coordinate descent).
// Always returns a valid assignment (the best decode seen over all sweeps)
// plus the final dual value, an upper bound on the true MAP value. The dual
// sequence recorded in `dual_per_sweep` is non-increasing.
struct MplpTrace {
  std::vector<double> dual_per_sweep;
  bool converged = false;
  bool forbidden_clamped = false;
};
MapResult mplp_map(const PairwiseModel& m, const MplpOptions& opts = {},
                   MplpTrace* trace = nullptr);

MapResult solve_map(const PairwiseModel& m, SolveMethod method,
                    const MplpOptions& mplp_opts = {});

}  // namespace pmap
