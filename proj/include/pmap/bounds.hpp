#pragma once
// Efficient log-partition constructions from low-dimensional random MAP
// perturbations: the subset-family upper bound, the inflated-MAP
// approximation, and the cumulant-corrected lower bound.
//
// Noise stream discipline (shared by every estimator here and by the CRF
// training code): one Rng per draw, seeded from the derived draw seed; the
// draw walks subsets in family order and, within a subset, restricted
// assignments y_alpha in row-major order (lowest variable slowest). A
// FullJoint scheme therefore consumes the identical stream as
// estimate_logZ_full, and a one-subset family over all variables is
// draw-for-draw equal to it.

#include <cstdint>
#include <optional>
#include <vector>

#include "pmap/mapsolve.hpp"
#include "pmap/model.hpp"
#include "pmap/perturb.hpp"
#include "pmap/rng.hpp"

namespace pmap {

struct PerturbationScheme {
  enum class Kind { FullJoint, Unary, Blocks, None };

  Kind kind = Kind::Unary;
  std::vector<std::vector<int>> subsets;  // Blocks only

  static PerturbationScheme full_joint() { return {Kind::FullJoint, {}}; }
  static PerturbationScheme unary() { return {Kind::Unary, {}}; }
  static PerturbationScheme blocks(std::vector<std::vector<int>> s) {
    return {Kind::Blocks, std::move(s)};
  }
  // Zero perturbation; valid only where a degenerate scheme is documented
  // (CRF ablation), not for the logZ bounds.
  static PerturbationScheme none() { return {Kind::None, {}}; }

  // Blocks with variables sorted ascending; Unary resolves to singletons.
  std::vector<std::vector<int>> resolve(const PairwiseModel& m) const;
  // Subset-family invariants: subsets nonempty, indices valid, union covers
  // all variables. Throws std::invalid_argument.
  void validate(const PairwiseModel& m) const;
};

// One perturbed MAP solve: max_y { phi(y) + scale * sum_alpha gamma(y_alpha) }.
// Noise subsets of size <= 2 are folded into a model copy and dispatched to
// the solver; larger subsets and FullJoint require Brute and are evaluated by
// enumeration. GraphCut accepts singleton subsets only (unary noise keeps a
// supermodular model supermodular).
struct PerturbedSolve {
  double value = 0.0;
  Assignment argmax;
};
PerturbedSolve perturbed_map(const PairwiseModel& m,
                             const PerturbationScheme& scheme, double scale,
                             Rng& rng, SolveMethod method,
                             const MplpOptions& mplp_opts = {});

// Corollary-1 upper bound: mean over m draws of the perturbed MAP value.
EstimateReport upper_bound_logZ(const PairwiseModel& m,
                                const PerturbationScheme& scheme,
                                SolveMethod method, std::size_t draws,
                                std::uint64_t seed,
                                const MplpOptions& mplp_opts = {});

// ---------------------------------------------------------------------------
// Lower bound

struct LowerBoundConfig {
  std::vector<double> lambda_grid;  // sorted, within [0,1), contains 0
  std::size_t draws = 100;
};

std::vector<double> default_lambda_grid();  // 0, 0.1, ..., 0.9

// Cumulant generating function of the zero-mean Gumbel:
// K(lambda) = lgamma(1 - lambda) - lambda * c, finite for lambda < 1.
double gumbel_cumulant(double lambda);

double logmeanexp(const std::vector<double>& xs);
// Delete-one jackknife standard error of logmeanexp (heavy-tailed samples
// make the naive SE misleading).
double logmeanexp_jackknife_se(const std::vector<double>& xs);

// For each lambda: L = logmeanexp of perturbed MAP values (noise scaled by
// lambda) minus |A| * K(lambda); returns the best L over the grid. The
// lambda = 0 entry is deterministic and equals the plain MAP value exactly.
EstimateReport lower_bound_logZ(const PairwiseModel& m,
                                const PerturbationScheme& scheme,
                                SolveMethod method,
                                const LowerBoundConfig& config,
                                std::uint64_t seed,
                                const MplpOptions& mplp_opts = {});

// ---------------------------------------------------------------------------
// Sample-inflated MAP approximation (collapsed perturbations)

enum class InflationVariant { ExactAverage, TiledGrid };

struct InflationConfig {
  int copies = 16;  // m
  InflationVariant variant = InflationVariant::ExactAverage;
  // beta; defaults to 1/m for ExactAverage and 1 for TiledGrid.
  std::optional<double> perturbation_scale;
  SolveMethod solver = SolveMethod::GraphCut;
  int reports = 1;  // independent estimates (one MAP solve each)
  MplpOptions mplp;

  double beta() const {
    if (perturbation_scale) return *perturbation_scale;
    return variant == InflationVariant::ExactAverage ? 1.0 / copies : 1.0;
  }
};

// ExactAverage: n*m copy-variables; unary tables theta_i/m + beta*gamma per
// copy, every original edge expanded to the complete copy-bipartite set with
// tables theta_ij/m^2 (the exact pairwise decomposition of the averaged
// potential). The estimate is the single MAP value of the inflated model.
//
// TiledGrid: the grid tiled T x T with T^2 = m, original tables kept,
// adjacent tiles stitched by reusing the boundary-adjacent original edge of
// the same row/column across the seam; fresh beta-scaled unary noise per
// copy. The estimate is (MAP value) / m.
EstimateReport approx_logZ_inflation(const PairwiseModel& m,
                                     const InflationConfig& config,
                                     std::uint64_t seed);

// The inflated model itself (exposed for tests).
PairwiseModel build_inflated_model(const PairwiseModel& m,
                                   const InflationConfig& config, Rng& rng);

}  // namespace pmap
