#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "cplcalib/camera_model.hpp"

namespace cplcalib {

// Index of each component in the 13-vector. The order is fixed:
// (fx, fy, u0, v0, b, d, theta_p, tx, ty, tz, X, Y, Z).
enum class Param : int {
  fx = 0,
  fy = 1,
  u0 = 2,
  v0 = 3,
  b = 4,
  d = 5,
  theta_p = 6,
  tx = 7,
  ty = 8,
  tz = 9,
  X = 10,
  Y = 11,
  Z = 12,
};

inline constexpr int kNumParams = 13;
inline constexpr int kNumCameraParams = 10;  // everything before the X head

inline constexpr std::array<std::string_view, kNumParams> kParamNames = {
    "fx", "fy", "u0", "v0", "b",  "d",  "theta_p",
    "tx", "ty", "tz", "X",  "Y",  "Z"};

constexpr std::string_view param_name(Param p) {
  return kParamNames[static_cast<std::size_t>(p)];
}

// The 13 estimable quantities: ten camera parameters plus the three
// world-point heads. theta_p is in radians here.
struct ParamVector13 {
  std::array<double, kNumParams> values{};

  double& operator[](Param p) { return values[static_cast<std::size_t>(p)]; }
  double operator[](Param p) const {
    return values[static_cast<std::size_t>(p)];
  }
  double& at(int i) { return values[static_cast<std::size_t>(i)]; }
  double at(int i) const { return values[static_cast<std::size_t>(i)]; }

  bool operator==(const ParamVector13&) const = default;

  static ParamVector13 from_parts(const CameraParams& p, const WorldPoint& heads) {
    ParamVector13 v;
    v[Param::fx] = p.intrinsics.fx;
    v[Param::fy] = p.intrinsics.fy;
    v[Param::u0] = p.intrinsics.u0;
    v[Param::v0] = p.intrinsics.v0;
    v[Param::b] = p.extrinsics.b;
    v[Param::d] = p.d;
    v[Param::theta_p] = p.extrinsics.theta_p;
    v[Param::tx] = p.extrinsics.tx;
    v[Param::ty] = p.extrinsics.ty;
    v[Param::tz] = p.extrinsics.tz;
    v[Param::X] = heads.X;
    v[Param::Y] = heads.Y;
    v[Param::Z] = heads.Z;
    return v;
  }

  CameraParams camera_params() const {
    CameraParams p;
    p.intrinsics = {(*this)[Param::fx], (*this)[Param::fy], (*this)[Param::u0],
                    (*this)[Param::v0]};
    p.extrinsics = {(*this)[Param::b], (*this)[Param::theta_p],
                    (*this)[Param::tx], (*this)[Param::ty], (*this)[Param::tz]};
    p.d = (*this)[Param::d];
    return p;
  }

  WorldPoint world_heads() const {
    return {(*this)[Param::X], (*this)[Param::Y], (*this)[Param::Z]};
  }
};

}  // namespace cplcalib
