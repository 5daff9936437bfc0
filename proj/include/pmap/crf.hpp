#pragma once
// Perturbed conditional random field learning: the surrogate loss
// J(theta) = sum_(x,y) ( E max_yhat { theta'Phi(x,yhat) + sum gamma } -
// theta'Phi(x,y) ), its moment-matching stochastic gradient via perturbed
// MAP argmaxes, SGD training, and the binary denoising task.
//
// Common random numbers: the noise for (example k, draw j) at SGD step t is
// keyed by derive_seed(seed, ...) only, so the fixed-seed objective is a
// pointwise maximum of affine functions of theta (convex, piecewise linear).

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmap/bounds.hpp"
#include "pmap/mapsolve.hpp"
#include "pmap/model.hpp"

namespace pmap {

// Observed side of an example (denoising: noisy pixel labels).
using Observation = std::vector<int>;

struct LabeledExample {
  Observation x;
  Assignment y;
};
using Dataset = std::vector<LabeledExample>;

// Task structure: feature vector Phi(x, y) whose inner product with theta
// decomposes as a pairwise model over y, so MAP solvers apply.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual int dim() const = 0;
  virtual PairwiseModel build_model(std::span<const double> theta,
                                    const Observation& x) const = 0;
  // out += w * Phi(x, y)
  virtual void add_features(const Observation& x, const Assignment& y,
                            double w, std::span<double> out) const = 0;

  std::vector<double> features(const Observation& x, const Assignment& y) const {
    std::vector<double> f(dim(), 0.0);
    add_features(x, y, 1.0, f);
    return f;
  }
};

struct CrfParams {
  std::vector<double> theta;
  const FeatureMap* feature_map = nullptr;
};

// Denoising features: one unary weight per pixel (agreement of the label
// with the observed pixel) and one pairwise weight per grid edge (label
// agreement), theta dimension rows*cols + |grid edges|.
class DenoiseFeatureMap : public FeatureMap {
 public:
  DenoiseFeatureMap(int rows, int cols);
  int dim() const override;
  PairwiseModel build_model(std::span<const double> theta,
                            const Observation& x) const override;
  void add_features(const Observation& x, const Assignment& y, double w,
                    std::span<double> out) const override;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_pixels() const { return rows_ * cols_; }
  // Half-open range of the pairwise coordinates of theta.
  std::pair<int, int> pairwise_range() const {
    return {num_pixels(), dim()};
  }

 private:
  int rows_, cols_;
  std::vector<std::pair<int, int>> edges_;
};

// ---------------------------------------------------------------------------

double surrogate_loss(const CrfParams& params, const Dataset& data,
                      const PerturbationScheme& scheme, std::size_t draws,
                      std::uint64_t seed, SolveMethod solver,
                      const MplpOptions& mplp_opts = {});

struct GradientEstimate {
  std::vector<double> gradient;
  // Per example: empirical distribution over sampled argmaxes (counts).
  std::vector<std::map<Assignment, int>> argmax_counts;
  std::size_t draws = 0;
  double loss = 0.0;  // the matching surrogate loss estimate, same draws

  // Per-coordinate standard error of the gradient implied by the stored
  // argmax frequencies.
  std::vector<double> per_coordinate_se(const CrfParams& params,
                                        const Dataset& data) const;
};

GradientEstimate surrogate_gradient(const CrfParams& params,
                                    const Dataset& data,
                                    const PerturbationScheme& scheme,
                                    std::size_t draws, std::uint64_t seed,
                                    SolveMethod solver,
                                    const MplpOptions& mplp_opts = {});

// Exact gradient from enumerated Gibbs expectations (oracle-scale models).
std::vector<double> exact_crf_gradient(const CrfParams& params,
                                       const Dataset& data);
// Exact CRF loss sum_(x,y) (log Z_x - theta'Phi(x,y)).
double exact_crf_loss(const CrfParams& params, const Dataset& data);

// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 100;
  double step = 0.1;            // step_t = step / sqrt(t+1)
  bool sqrt_decay = true;       // false: constant step
  std::size_t draws = 1;        // perturbation draws per example per step
  std::uint64_t seed = 0;
  SolveMethod solver = SolveMethod::GraphCut;
  MplpOptions mplp;
  // Coordinates clamped to >= 0 after every step (keeps graphcut
  // eligibility for agreement-style pairwise weights).
  std::optional<std::pair<int, int>> nonneg_range;
  bool exact_gradient = false;  // oracle moment matching instead of draws
  double divergence_factor = 10.0;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct TrainResult {
  CrfParams params;
  std::vector<EpochRecord> history;
  std::vector<std::vector<double>> trajectory;  // theta after each epoch
};

// SGD on the surrogate gradient; aborts with std::runtime_error when the
// loss estimate exceeds divergence_factor * the initial loss.
TrainResult train(const FeatureMap& fm, const Dataset& data,
                  const PerturbationScheme& scheme, const TrainConfig& config,
                  std::vector<double> theta0 = {});

// Mean fraction of mismatched pixels after MAP decoding of each observation.
double pixel_error(const CrfParams& params, const Dataset& data,
                   SolveMethod solver, const MplpOptions& mplp_opts = {});

// ---------------------------------------------------------------------------
// Denoising data

struct DenoiseDataset {
  int rows = 0, cols = 0;
  double flip_prob = 0.0;
  std::uint64_t seed = 0;
  Assignment clean;  // shared clean image, row-major 0/1
  Dataset train;
  Dataset test;
};

// Fixed procedural silhouette at the requested resolution; each example is
// the clean image with i.i.d. pixel flips. Deterministic in the seed.
DenoiseDataset gen_denoise_dataset(int rows, int cols, int num_train,
                                   int num_test, double flip_prob,
                                   std::uint64_t seed);

Assignment silhouette_image(int rows, int cols);

std::string format_denoise_dataset(const DenoiseDataset& d);
DenoiseDataset parse_denoise_dataset(const std::string& text,
                                     const std::string& origin = "<string>");

// Trained parameters in the model-format style with a `crf v1` header.
std::string format_crf_params(const DenoiseFeatureMap& fm,
                              const std::vector<double>& theta);

}  // namespace pmap
