#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cplcalib/loss.hpp"
#include "cplcalib/param_vector.hpp"
#include "cplcalib/rng.hpp"

namespace cplcalib {

struct ParamRange {
  double min = 0.0;
  double max = 0.0;

  bool fixed() const { return min == max; }
  bool operator==(const ParamRange&) const = default;
};

// Per-parameter sampling bounds. Angles are degrees here, matching the
// published statistics tables; conversion to radians happens on use.
struct ParamRanges {
  ParamRange fx, fy, u0, v0, b, d, theta_p_deg, tx, ty, tz;
  // Varied when generating CARLA configurations but never part of the
  // estimable parameter vector; sampled and discarded.
  ParamRange yaw_deg{0.0, 0.0};
  ParamRange roll_deg{0.0, 0.0};
  bool tie_fy_to_fx = false;
  double d_min_guard = 0.1;

  // Throws Error when any min exceeds its max.
  void validate() const;
};

// Presets transcribed from the published dataset statistics.
ParamRanges cvgl_ranges();
ParamRanges cityscapes_ranges();
ParamRanges tsinghua_ranges();
std::optional<ParamRanges> preset_by_name(std::string_view name);

// key=value ranges file for custom presets (keys fx_min, fx_max, ...).
ParamRanges load_ranges(const std::filesystem::path& path);

// One sampled camera configuration in file units (theta_p in degrees).
struct RawConfig {
  double fx = 0, fy = 0, u0 = 0, v0 = 0, b = 0, d = 0;
  double theta_p_deg = 0, tx = 0, ty = 0, tz = 0;
  double yaw_deg = 0, roll_deg = 0;

  CameraParams camera_params() const;
};

// Draws every parameter uniformly from its range (fixed parameters are
// returned exactly); disparity is resampled until it clears the guard band.
// Throws EmptyRangeAfterGuardError when the disparity range lies entirely
// inside the guard band.
RawConfig sample_raw_config(const ParamRanges& ranges, Rng& rng);

// Seed-deterministic single draw, in library units (theta_p in radians).
CameraParams sample_config(const ParamRanges& ranges, std::uint64_t seed);

// A pixel correspondence with its measured disparity.
struct Observation {
  double u = 0.0;
  double v = 0.0;
  double disparity = 0.0;

  bool operator==(const Observation&) const = default;
};

// One synthetic camera configuration with its correspondences and the
// ground-truth world points of the clean (pre-noise) pixels.
struct SyntheticRecord {
  int config_id = 0;
  double fx = 0, fy = 0, u0 = 0, v0 = 0, b = 0, d = 0;
  double theta_p_deg = 0, tx = 0, ty = 0, tz = 0;
  std::vector<Observation> observations;
  std::vector<WorldPoint> world_points;
  // Generation metadata; recorded in the run manifest, not in the dataset file.
  double noise_sigma = 0.0;

  CameraParams camera_params() const;

  // Ground-truth 13-vector: camera parameters (radians) plus the centroid of
  // the stored world points as the (X, Y, Z) heads.
  ParamVector13 param_vector() const;

  // Observations as loss input. with_disparity selects the solver path
  // (per-point overrides); without it the scalar d head drives the chain.
  CorrespondenceSet correspondences(bool with_disparity = true) const;

  bool operator==(const SyntheticRecord& other) const;
};

// Samples n_configs configurations, pts_per_config pixel observations each
// (uniform over the image rectangle [0, 2*u0] x [0, 2*v0], disparity drawn
// per point from the d range), computes ground-truth world points, then adds
// zero-mean Gaussian pixel noise of the given sigma to (u, v). Each config
// uses an independent sub-stream of the seed, so output is reproducible and
// order-independent.
std::vector<SyntheticRecord> generate_records(const ParamRanges& ranges,
                                              int n_configs,
                                              int pts_per_config,
                                              double noise_sigma,
                                              std::uint64_t seed);

// Comma-separated dataset format: a header line, then one record per line
// with config_id, the ten camera parameters (theta_p in degrees), the
// (u, v, disparity) triples, and the (X, Y, Z) triples, all doubles written
// with 17 significant digits. Every record in a file has the same number of
// points.
std::string dataset_header(int pts_per_config);
std::string serialize_records(const std::vector<SyntheticRecord>& records);
std::vector<SyntheticRecord> parse_records(const std::string& text);

void save_records(const std::filesystem::path& path,
                  const std::vector<SyntheticRecord>& records);
std::vector<SyntheticRecord> load_records(const std::filesystem::path& path);

}  // namespace cplcalib
