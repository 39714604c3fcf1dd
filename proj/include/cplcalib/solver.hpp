#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cplcalib/jacobian.hpp"
#include "cplcalib/loss.hpp"

namespace cplcalib {

// Shared optimizer settings for the direct solver and the MTL trainer.
// Defaults follow the training protocol: Adam, base learning rate 1e-3,
// batch size 16, up to 200 epochs with early stopping.
struct SolverConfig {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int max_epochs = 200;
  int early_stopping_patience = 20;
  double min_improvement = 1e-10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  // Plateau schedule: MAE has a non-smooth optimum, so Adam oscillates at
  // the learning-rate scale until the rate is annealed.
  double lr_decay = 0.5;
  int lr_patience = 10;
  double min_learning_rate = 1e-12;

  void validate() const;
};

// Adam with bias correction over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, const SolverConfig& cfg);

  // Applies one update in place; entries with mask[i] = false are skipped.
  void step(std::vector<double>& params, const std::vector<double>& grads,
            const std::vector<char>& mask, double learning_rate);

 private:
  double beta1_, beta2_, epsilon_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct FitResult {
  CameraParams params;
  std::vector<double> loss_trace;
  int epochs_run = 0;
  bool converged = false;
};

// Parameters held fixed during fitting, by camera-parameter index.
struct FixMask {
  std::array<bool, kNumCameraParams> fixed{};

  void fix(Param p) { fixed[static_cast<std::size_t>(p)] = true; }
  bool is_fixed(Param p) const { return fixed[static_cast<std::size_t>(p)]; }
};

// Recovers camera parameters by Adam descent on the mean world-point MAE
// between project_to_world(obs_i) and target_world[i]. Deterministic for a
// fixed config. Throws ZeroDisparityError when any iterate drives the
// effective disparity below the guard, DivergenceDetectedError when the
// loss stops being finite.
FitResult fit_parameters(const CorrespondenceSet& obs,
                         const std::vector<WorldPoint>& target_world,
                         const CameraParams& init, const SolverConfig& cfg,
                         const FixMask& fix = {});

}  // namespace cplcalib
