#include <doctest.h>

#include <cmath>

#include "cplcalib/datagen.hpp"
#include "cplcalib/solver.hpp"
#include "oracles.hpp"

using namespace cplcalib;

namespace {

struct Problem {
  CorrespondenceSet obs;
  std::vector<WorldPoint> targets;
  CameraParams gt;
};

Problem noiseless_problem(std::uint64_t seed, int points) {
  const auto records = generate_records(cvgl_ranges(), 1, points, 0.0, seed);
  const SyntheticRecord& rec = records[0];
  Problem prob;
  prob.obs = rec.correspondences(/*with_disparity=*/true);
  prob.targets = rec.world_points;
  prob.gt = rec.camera_params();
  return prob;
}

CameraParams perturb(const CameraParams& gt, const FixMask& fix, double frac,
                     Rng& rng) {
  ParamVector13 v = ParamVector13::from_parts(gt, {});
  for (int k = 0; k < kNumCameraParams; ++k) {
    if (fix.fixed[static_cast<std::size_t>(k)]) continue;
    const double scale = std::max(std::abs(v.at(k)), 0.5);
    v.at(k) += frac * scale * rng.uniform(-1.0, 1.0);
  }
  return v.camera_params();
}

FixMask pin_intrinsics_and_baseline() {
  FixMask fix;
  fix.fix(Param::fx);
  fix.fix(Param::fy);
  fix.fix(Param::u0);
  fix.fix(Param::v0);
  fix.fix(Param::b);
  return fix;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("ground-truth init converges at epoch one") {
  const Problem prob = noiseless_problem(5, 16);
  SolverConfig cfg;
  const FitResult fit = fit_parameters(prob.obs, prob.targets, prob.gt, cfg);
  CHECK(fit.converged);
  CHECK(fit.epochs_run == 1);
  REQUIRE(fit.loss_trace.size() == 1);
  CHECK(fit.loss_trace.front() < 1e-12);
}

TEST_CASE("recovers pitch and translation on noiseless data") {
  const Problem prob = noiseless_problem(29, 32);
  const FixMask fix = pin_intrinsics_and_baseline();
  Rng rng(7);
  const CameraParams init = perturb(prob.gt, fix, 0.05, rng);

  SolverConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.max_epochs = 6000;
  cfg.early_stopping_patience = 40;
  cfg.lr_patience = 6;
  const FitResult fit = fit_parameters(prob.obs, prob.targets, init, cfg, fix);

  CHECK(std::abs(rad_to_deg(fit.params.extrinsics.theta_p) -
                 rad_to_deg(prob.gt.extrinsics.theta_p)) < 1e-3);
  CHECK(std::abs(fit.params.extrinsics.tx - prob.gt.extrinsics.tx) < 1e-3);
  CHECK(std::abs(fit.params.extrinsics.ty - prob.gt.extrinsics.ty) < 1e-3);
  CHECK(std::abs(fit.params.extrinsics.tz - prob.gt.extrinsics.tz) < 1e-3);
  // Pinned parameters never move.
  CHECK(fit.params.intrinsics.fx == init.intrinsics.fx);
  CHECK(fit.params.intrinsics.fy == init.intrinsics.fy);
  CHECK(fit.params.intrinsics.u0 == init.intrinsics.u0);
  CHECK(fit.params.intrinsics.v0 == init.intrinsics.v0);
  CHECK(fit.params.extrinsics.b == init.extrinsics.b);
}

TEST_CASE("zero-disparity init aborts before any step") {
  const Problem prob = noiseless_problem(31, 8);
  CorrespondenceSet no_disp;
  for (const PixelObservation& o : prob.obs.observations) {
    no_disp.observations.push_back({o.u, o.v, std::nullopt});
  }
  CameraParams init = prob.gt;
  init.d = 0.0;
  SolverConfig cfg;
  CHECK_THROWS_AS(fit_parameters(no_disp, prob.targets, init, cfg),
                  ZeroDisparityError);
}

TEST_CASE("small steps keep the loss trace non-increasing") {
  // Inside one smooth piece of the MAE landscape the loss must descend
  // monotonically, so every free parameter starts further from its optimum
  // than the total distance 100 epochs at lr 1e-4 can cover.
  const Problem prob = noiseless_problem(37, 16);
  const FixMask fix = pin_intrinsics_and_baseline();
  Rng rng(11);
  ParamVector13 v = ParamVector13::from_parts(prob.gt, {});
  for (int k = 0; k < kNumCameraParams; ++k) {
    if (fix.fixed[static_cast<std::size_t>(k)]) continue;
    const double scale = std::max(std::abs(v.at(k)), 0.5);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    v.at(k) += sign * 0.05 * scale * rng.uniform(0.6, 1.0);
  }
  SolverConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.max_epochs = 100;
  const FitResult fit =
      fit_parameters(prob.obs, prob.targets, v.camera_params(), cfg, fix);
  for (std::size_t i = 1; i < fit.loss_trace.size(); ++i) {
    CHECK(fit.loss_trace[i] <= fit.loss_trace[i - 1] + 1e-12);
  }
}

TEST_CASE("identical configs give bitwise-identical traces") {
  const Problem prob = noiseless_problem(41, 12);
  const FixMask fix = pin_intrinsics_and_baseline();
  Rng rng(13);
  const CameraParams init = perturb(prob.gt, fix, 0.05, rng);
  SolverConfig cfg;
  cfg.max_epochs = 50;
  const FitResult a = fit_parameters(prob.obs, prob.targets, init, cfg, fix);
  const FitResult b = fit_parameters(prob.obs, prob.targets, init, cfg, fix);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.epochs_run == b.epochs_run);
}

TEST_CASE("absurd learning rates are detected as divergence") {
  const Problem prob = noiseless_problem(43, 8);
  Rng rng(17);
  const CameraParams init = perturb(prob.gt, {}, 0.05, rng);
  SolverConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.max_epochs = 50;
  CHECK_THROWS_AS(fit_parameters(prob.obs, prob.targets, init, cfg),
                  DivergenceDetectedError);
}

TEST_CASE("mismatched observation and target counts are rejected") {
  const Problem prob = noiseless_problem(47, 8);
  std::vector<WorldPoint> short_targets(prob.targets.begin(),
                                        prob.targets.end() - 1);
  SolverConfig cfg;
  CHECK_THROWS_AS(fit_parameters(prob.obs, short_targets, prob.gt, cfg),
                  ShapeMismatchError);
}

}  // TEST_SUITE
