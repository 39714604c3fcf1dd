#include "cplcalib/jacobian.hpp"

#include <cmath>

namespace cplcalib {

WorldPointJacobian grad_world_point(const PixelObservation& obs,
                                    const CameraParams& p) {
  const double d = effective_disparity(obs, p);
  if (std::abs(d) < kDisparityGuard) {
    throw ZeroDisparityError("grad_world_point: |disparity| below 1e-9");
  }
  const Intrinsics& k = p.intrinsics;
  const Extrinsics& e = p.extrinsics;

  const double x = k.fx * e.b / d;
  const double y = -(e.b / d) * (obs.u - k.u0);
  const double z = (k.fx * e.b / (k.fy * d)) * (k.v0 - obs.v);

  // Camera-point partials w.r.t. (fx, fy, u0, v0, b, d). The scalar d only
  // participates when the observation has no disparity of its own.
  const double d_live = obs.disparity.has_value() ? 0.0 : 1.0;
  std::array<double, 6> dx{}, dy{}, dz{};
  dx[0] = e.b / d;                                // fx
  dz[0] = (e.b / (k.fy * d)) * (k.v0 - obs.v);
  dz[1] = -z / k.fy;                              // fy
  dy[2] = e.b / d;                                // u0
  dz[3] = k.fx * e.b / (k.fy * d);                // v0
  dx[4] = k.fx / d;                               // b
  dy[4] = -(obs.u - k.u0) / d;
  dz[4] = (k.fx / (k.fy * d)) * (k.v0 - obs.v);
  dx[5] = d_live * (-x / d);                      // d
  dy[5] = d_live * (-y / d);
  dz[5] = d_live * (-z / d);

  const double ct = std::cos(e.theta_p);
  const double st = std::sin(e.theta_p);

  WorldPointJacobian jac;
  auto& JX = jac.rows[0];
  auto& JY = jac.rows[1];
  auto& JZ = jac.rows[2];
  for (std::size_t q = 0; q < 6; ++q) {
    JX[q] = ct * dx[q] + st * dz[q];
    JY[q] = dy[q];
    JZ[q] = -st * dx[q] + ct * dz[q];
  }
  JX[6] = -x * st + z * ct;  // theta_p
  JY[6] = 0.0;
  JZ[6] = -x * ct - z * st;
  JX[7] = 1.0;  // tx
  JY[8] = 1.0;  // ty
  JZ[9] = 1.0;  // tz
  return jac;
}

}  // namespace cplcalib
