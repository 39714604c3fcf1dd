#pragma once

#include <numbers>
#include <optional>

#include "cplcalib/errors.hpp"

namespace cplcalib {

constexpr double deg_to_rad(double deg) {
  return deg * (std::numbers::pi / 180.0);
}

constexpr double rad_to_deg(double rad) {
  return rad * (180.0 / std::numbers::pi);
}

// Pinhole intrinsics with zero skew: K = [[fx, 0, u0], [0, fy, v0], [0, 0, 1]].
struct Intrinsics {
  double fx = 1.0;  // horizontal focal length (pixels)
  double fy = 1.0;  // vertical focal length (pixels)
  double u0 = 0.0;  // principal point x (pixels)
  double v0 = 0.0;  // principal point y (pixels)

  bool operator==(const Intrinsics&) const = default;
};

// Stereo rig pose. Angles are radians everywhere inside the library;
// degrees appear only at file and CLI boundaries.
struct Extrinsics {
  double b = 1.0;        // stereo baseline (meters)
  double theta_p = 0.0;  // pitch (radians), expected in (-pi, pi]
  double tx = 0.0;       // translation (meters)
  double ty = 0.0;
  double tz = 0.0;

  bool operator==(const Extrinsics&) const = default;
};

// The estimable camera parameters. d is the scalar disparity carried in the
// parameter vector; individual observations may override it.
struct CameraParams {
  Intrinsics intrinsics;
  Extrinsics extrinsics;
  double d = 1.0;  // disparity (pixels), must stay nonzero in the stereo chain

  bool operator==(const CameraParams&) const = default;
};

// A 2D image point, optionally with its own measured disparity.
struct PixelObservation {
  double u = 0.0;
  double v = 0.0;
  std::optional<double> disparity;

  bool operator==(const PixelObservation&) const = default;
};

// Camera-frame point (meters). x_cam points along the optical axis in this
// parameterization, so depth lives in x_cam rather than z_cam.
struct CameraPoint {
  double x_cam = 0.0;
  double y_cam = 0.0;
  double z_cam = 0.0;

  bool operator==(const CameraPoint&) const = default;
};

// World-frame point (meters).
struct WorldPoint {
  double X = 0.0;
  double Y = 0.0;
  double Z = 0.0;

  bool operator==(const WorldPoint&) const = default;
};

// Disparity actually used for an observation: the per-point override when
// present, the scalar parameter otherwise.
double effective_disparity(const PixelObservation& obs, const CameraParams& p);

// Stereo image -> camera transform:
//   x_cam = fx*b/d,  y_cam = -(x_cam/fx)*(u - u0),  z_cam = (x_cam/fy)*(v0 - v)
// Throws ZeroDisparityError when the effective disparity is zero and
// NonFiniteError when any output component is not finite.
CameraPoint image_to_camera(const PixelObservation& obs, const CameraParams& p);

// Camera -> world transform (pitch rotation plus translation):
//   X = x_cam*cos(tp) + z_cam*sin(tp) + tx
//   Y = y_cam + ty
//   Z = -x_cam*sin(tp) + z_cam*cos(tp) + tz
WorldPoint camera_to_world(const CameraPoint& c, const Extrinsics& e);

// Full chain: camera_to_world(image_to_camera(obs, p), p.extrinsics).
WorldPoint project_to_world(const PixelObservation& obs, const CameraParams& p);

// Algebraic inverse of camera_to_world.
CameraPoint world_to_camera(const WorldPoint& w, const Extrinsics& e);

// Algebraic inverse of image_to_camera. The returned observation carries the
// disparity d = fx*b/x_cam. Throws DegeneratePointError when x_cam = 0.
PixelObservation camera_to_image(const CameraPoint& c, const Intrinsics& intr,
                                 double baseline);

// Monocular, depth-free parameterization:
//   y_cam = (u - u0)/fx,  z_cam = (v - v0)/fy,  x_cam = 1
// Kept distinct from the stereo variant; note the sign of y_cam differs.
CameraPoint normalized_image_to_camera(const PixelObservation& obs,
                                       const Intrinsics& intr);

}  // namespace cplcalib
