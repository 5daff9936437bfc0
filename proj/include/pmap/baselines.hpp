#pragma once
// Log-partition baselines: sum-product loopy BP (Bethe estimate) and
// tree-reweighted BP (convex upper bound), plus exact uniform-spanning-tree
// edge appearance probabilities via effective resistance.

#include <vector>

#include "pmap/model.hpp"

namespace pmap {

struct EdgeAppearance {
  std::vector<double> rho;  // aligned with model.edges(), each in (0, 1]
};

struct BpOptions {
  int max_iters = 2000;
  double damping = 0.5;  // log-space geometric damping, 0 = none
  double tol = 1e-10;    // max absolute message change
  bool check_beliefs = false;  // assert per-sweep belief normalization
};

struct BpResult {
  double log_z = 0.0;
  bool converged = false;
  int iterations = 0;
  // Excluded entries were mapped to a large negative surrogate.
  bool forbidden_clamped = false;
};

// Synchronous damped sum-product in log space. On a fixed point the Bethe
// free energy is returned; a non-convergent run reports the estimate from
// the final messages with converged = false.
BpResult bp_log_partition(const PairwiseModel& m, const BpOptions& opts = {});

// Tree-reweighted sum-product. At convergence the value upper-bounds log Z
// for any edge appearance vector in the spanning tree polytope.
BpResult trbp_log_partition(const PairwiseModel& m,
                            const EdgeAppearance& appearance,
                            const BpOptions& opts = {});

// rho_e = Pr[e in T] under the uniform spanning tree distribution, computed
// exactly as the effective resistance of e in the unit-conductance graph
// (matrix-tree identity). Throws on disconnected graphs.
EdgeAppearance uniform_spanning_edge_probs(const PairwiseModel& m);

}  // namespace pmap
