#include "cplcalib/loss.hpp"

#include <cmath>

namespace cplcalib {

namespace {

double world_point_mae(const WorldPoint& a, const WorldPoint& b) {
  return (std::abs(a.X - b.X) + std::abs(a.Y - b.Y) + std::abs(a.Z - b.Z)) / 3.0;
}

}  // namespace

double cpl_loss(const ParamVector13& gt, const ParamVector13& pred,
                const CorrespondenceSet& obs) {
  if (obs.empty()) {
    throw ShapeMismatchError("cpl_loss: correspondence set is empty");
  }
  const CameraParams gt_cam = gt.camera_params();
  const CameraParams pred_cam = pred.camera_params();
  double sum = 0.0;
  for (const PixelObservation& o : obs.observations) {
    sum += world_point_mae(project_to_world(o, gt_cam),
                           project_to_world(o, pred_cam));
  }
  const double projection_term = sum / static_cast<double>(obs.size());
  const double head_term = world_point_mae(gt.world_heads(), pred.world_heads());
  return projection_term + head_term;
}

ParamVector13 hybrid_vector(const ParamVector13& gt, const ParamVector13& pred,
                            Param k) {
  ParamVector13 h = gt;
  h[k] = pred[k];
  return h;
}

LossReport decomposed_loss(const ParamVector13& gt, const ParamVector13& pred,
                           const CorrespondenceSet& obs) {
  LossReport report;
  report.mode = LossMode::cpl_uniform;
  double sum = 0.0;
  for (int k = 0; k < kNumParams; ++k) {
    const double term =
        cpl_loss(gt, hybrid_vector(gt, pred, static_cast<Param>(k)), obs);
    report.per_param[static_cast<std::size_t>(k)] = term;
    sum += term;
  }
  report.total = sum / static_cast<double>(kNumParams);
  return report;
}

LossReport decomposed_loss(const ParamVector13& gt, const ParamVector13& pred,
                           const CorrespondenceSet& obs,
                           const std::array<double, kNumParams>& weights) {
  LossReport report;
  report.mode = LossMode::cpl_adaptive;
  report.weights = weights;
  double total = 0.0;
  for (int k = 0; k < kNumParams; ++k) {
    const double term =
        cpl_loss(gt, hybrid_vector(gt, pred, static_cast<Param>(k)), obs);
    report.per_param[static_cast<std::size_t>(k)] = term;
    total += weights[static_cast<std::size_t>(k)] * term;
  }
  report.total = total;
  return report;
}

AdaptiveWeights::AdaptiveWeights(double decay) : decay_(decay) {
  if (!(decay > 0.0 && decay < 1.0)) {
    throw Error("AdaptiveWeights: decay must lie in (0, 1)");
  }
  weights_.fill(1.0);
}

void AdaptiveWeights::update(
    const std::array<double, kNumParams>& per_param_losses) {
  double inv_sum = 0.0;
  std::array<double, kNumParams> inv{};
  for (int k = 0; k < kNumParams; ++k) {
    const auto i = static_cast<std::size_t>(k);
    ema_[i] = decay_ * ema_[i] + (1.0 - decay_) * per_param_losses[i];
    inv[i] = 1.0 / (ema_[i] + kEpsilon);
    inv_sum += inv[i];
  }
  for (int k = 0; k < kNumParams; ++k) {
    const auto i = static_cast<std::size_t>(k);
    weights_[i] = inv[i] / inv_sum * static_cast<double>(kNumParams);
  }
}

}  // namespace cplcalib
