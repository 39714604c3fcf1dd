#pragma once

#include <array>

#include "cplcalib/param_vector.hpp"

namespace cplcalib {

// Derivatives of the projected world point with respect to the ten camera
// parameters. Rows are (X, Y, Z); columns follow the parameter-vector order
// (fx, fy, u0, v0, b, d, theta_p, tx, ty, tz). theta_p is in radians.
struct WorldPointJacobian {
  std::array<std::array<double, kNumCameraParams>, 3> rows{};

  double at(int world_coord, Param p) const {
    return rows[static_cast<std::size_t>(world_coord)]
               [static_cast<std::size_t>(p)];
  }
};

// Solver-side disparity guard: gradients blow up as d -> 0, so values this
// close to zero are rejected instead of clamped.
inline constexpr double kDisparityGuard = 1e-9;

// Analytic Jacobian of project_to_world at (obs, p). When the observation
// carries its own disparity the d column is zero, since the scalar parameter
// never enters the chain. Throws ZeroDisparityError when the effective
// disparity is within kDisparityGuard of zero.
WorldPointJacobian grad_world_point(const PixelObservation& obs,
                                    const CameraParams& p);

}  // namespace cplcalib
