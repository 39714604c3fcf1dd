#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cplcalib/param_vector.hpp"

namespace cplcalib {

// Column order of the published evaluation tables. Differs from the
// parameter-vector order: theta_p comes last.
inline constexpr std::array<Param, kNumCameraParams> kEvalColumns = {
    Param::fx, Param::fy, Param::u0, Param::v0, Param::b,
    Param::d,  Param::tx, Param::ty, Param::tz, Param::theta_p};

inline constexpr int kNumHfovThresholds = 6;  // integer degrees 0..5

// Per-parameter normalized MAE plus horizontal-FOV threshold accuracies.
struct EvalTable {
  // Indexed by kEvalColumns position.
  std::array<double, kNumCameraParams> nmae{};
  std::array<double, kNumHfovThresholds> hfov_accuracy{};
  std::size_t sample_count = 0;
};

// Normalized mean absolute error: MAE(targets, preds) / mean(|targets|).
// Throws ZeroDenominatorError when mean(|targets|) = 0 and
// ShapeMismatchError on length mismatch or empty input.
double nmae(std::span<const double> targets, std::span<const double> preds);

// Signed variant: mean(pred - target) / mean(|targets|). Provided because the
// published tables contain negative entries the unsigned formula cannot
// produce; selected by the CLI --signed flag.
double nmae_signed(std::span<const double> targets, std::span<const double> preds);

// Horizontal field of view in degrees: 2*atan(w/(2f)). Strictly decreasing
// in f, strictly increasing in w. Throws NonPositiveInputError unless both
// are positive.
double hfov_deg(double focal, double width);

// For each threshold t (degrees), the fraction of samples whose hFOV error
// |hfov(pred) - hfov(gt)| is <= t. Threshold 0 therefore demands an exact
// match. Verifies the result is monotone non-decreasing in the threshold for
// ascending thresholds.
std::vector<double> hfov_accuracy(std::span<const double> gt_focals,
                                  std::span<const double> pred_focals,
                                  double width,
                                  std::span<const double> thresholds_deg);

// Full evaluation of a set of predictions: per-parameter NMAE over the ten
// camera parameters and hFOV accuracy at integer thresholds 0..5 from the fx
// column. Set signed_nmae to reproduce the signed reading of the tables.
EvalTable evaluate_predictions(std::span<const ParamVector13> targets,
                               std::span<const ParamVector13> preds,
                               double width, bool signed_nmae = false);

// Delimiter-separated table (header row + value row) in kEvalColumns order,
// followed by the hFOV accuracy block.
std::string render_eval_table(const EvalTable& table, char delimiter = ',');

// Line-oriented key=value rendering of the same table.
std::string render_eval_record(const EvalTable& table);

}  // namespace cplcalib
