#include "cplcalib/camera_model.hpp"

#include <cmath>

namespace cplcalib {

namespace {

bool finite3(double a, double b, double c) {
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
}

}  // namespace

double effective_disparity(const PixelObservation& obs, const CameraParams& p) {
  return obs.disparity.has_value() ? *obs.disparity : p.d;
}

CameraPoint image_to_camera(const PixelObservation& obs, const CameraParams& p) {
  const double d = effective_disparity(obs, p);
  if (d == 0.0) {
    throw ZeroDisparityError("image_to_camera: disparity is zero");
  }
  const Intrinsics& k = p.intrinsics;
  CameraPoint c;
  c.x_cam = k.fx * p.extrinsics.b / d;
  c.y_cam = -(c.x_cam / k.fx) * (obs.u - k.u0);
  c.z_cam = (c.x_cam / k.fy) * (k.v0 - obs.v);
  if (!finite3(c.x_cam, c.y_cam, c.z_cam)) {
    throw NonFiniteError("image_to_camera: non-finite camera point");
  }
  return c;
}

WorldPoint camera_to_world(const CameraPoint& c, const Extrinsics& e) {
  const double ct = std::cos(e.theta_p);
  const double st = std::sin(e.theta_p);
  WorldPoint w;
  w.X = c.x_cam * ct + c.z_cam * st + e.tx;
  w.Y = c.y_cam + e.ty;
  w.Z = -c.x_cam * st + c.z_cam * ct + e.tz;
  if (!finite3(w.X, w.Y, w.Z)) {
    throw NonFiniteError("camera_to_world: non-finite world point");
  }
  return w;
}

WorldPoint project_to_world(const PixelObservation& obs, const CameraParams& p) {
  return camera_to_world(image_to_camera(obs, p), p.extrinsics);
}

CameraPoint world_to_camera(const WorldPoint& w, const Extrinsics& e) {
  const double ct = std::cos(e.theta_p);
  const double st = std::sin(e.theta_p);
  const double dx = w.X - e.tx;
  const double dz = w.Z - e.tz;
  CameraPoint c;
  c.x_cam = dx * ct - dz * st;
  c.y_cam = w.Y - e.ty;
  c.z_cam = dx * st + dz * ct;
  if (!finite3(c.x_cam, c.y_cam, c.z_cam)) {
    throw NonFiniteError("world_to_camera: non-finite camera point");
  }
  return c;
}

PixelObservation camera_to_image(const CameraPoint& c, const Intrinsics& intr,
                                 double baseline) {
  if (c.x_cam == 0.0) {
    throw DegeneratePointError("camera_to_image: x_cam is zero");
  }
  PixelObservation obs;
  obs.u = intr.u0 - intr.fx * c.y_cam / c.x_cam;
  obs.v = intr.v0 - intr.fy * c.z_cam / c.x_cam;
  obs.disparity = intr.fx * baseline / c.x_cam;
  if (!finite3(obs.u, obs.v, *obs.disparity)) {
    throw NonFiniteError("camera_to_image: non-finite observation");
  }
  return obs;
}

CameraPoint normalized_image_to_camera(const PixelObservation& obs,
                                       const Intrinsics& intr) {
  CameraPoint c;
  c.x_cam = 1.0;
  c.y_cam = (obs.u - intr.u0) / intr.fx;
  c.z_cam = (obs.v - intr.v0) / intr.fy;
  if (!finite3(c.x_cam, c.y_cam, c.z_cam)) {
    throw NonFiniteError("normalized_image_to_camera: non-finite camera point");
  }
  return c;
}

}  // namespace cplcalib
