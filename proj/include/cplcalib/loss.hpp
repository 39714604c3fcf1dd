#pragma once

#include <array>
#include <optional>
#include <vector>

#include "cplcalib/param_vector.hpp"

namespace cplcalib {

// Point correspondences the loss is evaluated over. Observations may carry
// per-point disparities (solver path) or rely on the scalar d head (MTL
// path); see effective_disparity.
struct CorrespondenceSet {
  std::vector<PixelObservation> observations;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
};

enum class LossMode {
  baseline_mae,
  cpl_uniform,
  cpl_adaptive,
};

constexpr std::string_view loss_mode_name(LossMode m) {
  switch (m) {
    case LossMode::baseline_mae: return "baseline_mae";
    case LossMode::cpl_uniform: return "cpl_uniform";
    case LossMode::cpl_adaptive: return "cpl_adaptive";
  }
  return "unknown";
}

// One loss evaluation: the scalar total, the 13 per-parameter terms, and the
// weights used to combine them (adaptive mode only).
struct LossReport {
  double total = 0.0;
  std::array<double, kNumParams> per_param{};
  std::optional<std::array<double, kNumParams>> weights;
  LossMode mode = LossMode::cpl_uniform;
};

// Camera projection loss between a ground-truth and a predicted parameter
// vector: mean over observations of the world-point MAE (mean of the three
// coordinate absolute differences) between the two projections, plus the MAE
// of the (X, Y, Z) head components. Zero iff the projections and heads agree.
double cpl_loss(const ParamVector13& gt, const ParamVector13& pred,
                const CorrespondenceSet& obs);

// Per-parameter decomposition: term k is cpl_loss evaluated against the
// hybrid vector that takes component k from pred and the other twelve from
// gt. With uniform weighting the total is the mean of the 13 terms.
LossReport decomposed_loss(const ParamVector13& gt, const ParamVector13& pred,
                           const CorrespondenceSet& obs);

// Same decomposition combined with explicit weights: total = sum_k w_k * L_k.
LossReport decomposed_loss(const ParamVector13& gt, const ParamVector13& pred,
                           const CorrespondenceSet& obs,
                           const std::array<double, kNumParams>& weights);

// Builds the hybrid vector used by term k of the decomposition.
ParamVector13 hybrid_vector(const ParamVector13& gt, const ParamVector13& pred,
                            Param k);

// Adaptive per-term weights. Each update folds the latest per-parameter
// losses into an exponential moving average and sets
//   alpha_k = (1/(ema_k + eps)) / sum_j (1/(ema_j + eps)) * 13
// so the weights sum to 13 and larger loss terms receive smaller weights,
// normalizing the heterogeneous parameter ranges.
class AdaptiveWeights {
 public:
  static constexpr double kEpsilon = 1e-8;

  explicit AdaptiveWeights(double decay = 0.99);

  void update(const std::array<double, kNumParams>& per_param_losses);

  const std::array<double, kNumParams>& weights() const { return weights_; }
  const std::array<double, kNumParams>& ema() const { return ema_; }
  double decay() const { return decay_; }

 private:
  double decay_;
  std::array<double, kNumParams> ema_{};
  std::array<double, kNumParams> weights_;
};

}  // namespace cplcalib
