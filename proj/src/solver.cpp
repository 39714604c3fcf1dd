#include "cplcalib/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cplcalib {

namespace {

CameraParams params_from_array(const std::array<double, kNumCameraParams>& p) {
  CameraParams out;
  out.intrinsics = {p[0], p[1], p[2], p[3]};
  out.extrinsics = {p[4], p[6], p[7], p[8], p[9]};
  out.d = p[5];
  return out;
}

std::array<double, kNumCameraParams> array_from_params(const CameraParams& p) {
  return {p.intrinsics.fx, p.intrinsics.fy, p.intrinsics.u0, p.intrinsics.v0,
          p.extrinsics.b,  p.d,             p.extrinsics.theta_p,
          p.extrinsics.tx, p.extrinsics.ty, p.extrinsics.tz};
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_disparities(const CorrespondenceSet& obs, const CameraParams& p) {
  for (const PixelObservation& o : obs.observations) {
    if (std::abs(effective_disparity(o, p)) < kDisparityGuard) {
      throw ZeroDisparityError(
          "fit_parameters: effective disparity below 1e-9");
    }
  }
}

// Mean world-point MAE and its subgradient w.r.t. the ten camera parameters.
double loss_and_grad(const CorrespondenceSet& obs,
                     const std::vector<WorldPoint>& targets,
                     const CameraParams& p,
                     std::vector<double>& grad) {
  const double n = static_cast<double>(obs.size());
  double loss = 0.0;
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t i = 0; i < obs.observations.size(); ++i) {
    const WorldPoint w = project_to_world(obs.observations[i], p);
    const WorldPointJacobian jac = grad_world_point(obs.observations[i], p);
    const std::array<double, 3> residual = {
        w.X - targets[i].X, w.Y - targets[i].Y, w.Z - targets[i].Z};
    for (int c = 0; c < 3; ++c) {
      loss += std::abs(residual[static_cast<std::size_t>(c)]);
      const double s = sign(residual[static_cast<std::size_t>(c)]) / (3.0 * n);
      for (std::size_t k = 0; k < kNumCameraParams; ++k) {
        grad[k] += s * jac.rows[static_cast<std::size_t>(c)][k];
      }
    }
  }
  return loss / (3.0 * n);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("SolverConfig: learning_rate <= 0");
  if (max_epochs < 1) throw Error("SolverConfig: max_epochs < 1");
  if (batch_size < 1) throw Error("SolverConfig: batch_size < 1");
  if (early_stopping_patience < 1) {
    throw Error("SolverConfig: early_stopping_patience < 1");
  }
}

Adam::Adam(std::size_t size, const SolverConfig& cfg)
    : beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      epsilon_(cfg.epsilon),
      m_(size, 0.0),
      v_(size, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads,
                const std::vector<char>& mask, double learning_rate) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask[i]) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

FitResult fit_parameters(const CorrespondenceSet& obs,
                         const std::vector<WorldPoint>& target_world,
                         const CameraParams& init, const SolverConfig& cfg,
                         const FixMask& fix) {
  cfg.validate();
  if (obs.empty() || obs.size() != target_world.size()) {
    throw ShapeMismatchError(
        "fit_parameters: observations and targets must pair up");
  }
  check_disparities(obs, init);

  const std::array<double, kNumCameraParams> p_arr = array_from_params(init);
  // Adam runs in scale-normalized coordinates q_k = p_k / s_k so that a step
  // means the same relative change for meter-scale translations and
  // radian-scale angles alike.
  std::array<double, kNumCameraParams> scale{};
  for (std::size_t k = 0; k < kNumCameraParams; ++k) {
    scale[k] = std::max(1.0, std::abs(p_arr[k]));
  }
  std::vector<double> params(kNumCameraParams);
  for (std::size_t k = 0; k < kNumCameraParams; ++k) {
    params[k] = p_arr[k] / scale[k];
  }
  std::vector<double> grads(kNumCameraParams, 0.0);
  std::vector<char> mask(kNumCameraParams, 1);
  for (std::size_t k = 0; k < kNumCameraParams; ++k) {
    if (fix.fixed[k]) mask[k] = 0;
  }

  Adam adam(kNumCameraParams, cfg);
  FitResult result;
  result.params = init;

  double lr = cfg.learning_rate;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = params;
  int stall = 0;
  int lr_stall = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::array<double, kNumCameraParams> cur{};
    for (std::size_t k = 0; k < kNumCameraParams; ++k) {
      cur[k] = params[k] * scale[k];
    }
    const CameraParams cam = params_from_array(cur);
    check_disparities(obs, cam);

    double loss = 0.0;
    try {
      loss = loss_and_grad(obs, target_world, cam, grads);
    } catch (const NonFiniteError&) {
      // Overflow on the first epoch means the init itself is bad; later on
      // it means the iterates blew up.
      if (epoch == 0) throw;
      throw DivergenceDetectedError("fit_parameters: iterates overflowed");
    }
    if (!std::isfinite(loss)) {
      throw DivergenceDetectedError("fit_parameters: non-finite loss");
    }
    result.loss_trace.push_back(loss);
    result.epochs_run = epoch + 1;

    const double improvement = best_loss - loss;
    if (loss < best_loss) {
      best_loss = loss;
      best_params = params;
    }
    if (loss < 1e-15) {
      result.converged = true;
      break;
    }
    if (improvement < cfg.min_improvement) {
      ++stall;
      ++lr_stall;
    } else {
      stall = 0;
      lr_stall = 0;
    }
    if (stall >= cfg.early_stopping_patience) {
      result.converged = true;
      break;
    }
    if (lr_stall >= cfg.lr_patience) {
      lr = std::max(lr * cfg.lr_decay, cfg.min_learning_rate);
      lr_stall = 0;
    }

    // Chain rule back into the normalized coordinates.
    for (std::size_t k = 0; k < kNumCameraParams; ++k) grads[k] *= scale[k];
    adam.step(params, grads, mask, lr);
  }

  std::array<double, kNumCameraParams> best{};
  for (std::size_t k = 0; k < kNumCameraParams; ++k) {
    best[k] = best_params[k] * scale[k];
  }
  result.params = params_from_array(best);
  if (result.converged && !result.loss_trace.empty() &&
      result.loss_trace.back() > result.loss_trace.front()) {
    result.converged = false;
  }
  return result;
}

}  // namespace cplcalib
