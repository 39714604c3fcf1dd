#include "cplcalib/metrics.hpp"

#include <cmath>
#include <sstream>

#include "cplcalib/text.hpp"

namespace cplcalib {

namespace {

void require_paired(std::span<const double> a, std::span<const double> b,
                    const char* who) {
  if (a.size() != b.size()) {
    throw ShapeMismatchError(std::string(who) + ": length mismatch");
  }
  if (a.empty()) {
    throw ShapeMismatchError(std::string(who) + ": empty input");
  }
}

double mean_abs(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += std::abs(x);
  return sum / static_cast<double>(xs.size());
}

}  // namespace

double nmae(std::span<const double> targets, std::span<const double> preds) {
  require_paired(targets, preds, "nmae");
  double abs_err = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    abs_err += std::abs(targets[i] - preds[i]);
  }
  const double mae = abs_err / static_cast<double>(targets.size());
  const double denom = mean_abs(targets);
  if (denom == 0.0) {
    throw ZeroDenominatorError("nmae: mean(|targets|) is zero");
  }
  return mae / denom;
}

double nmae_signed(std::span<const double> targets,
                   std::span<const double> preds) {
  require_paired(targets, preds, "nmae_signed");
  double err = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    err += preds[i] - targets[i];
  }
  const double denom = mean_abs(targets);
  if (denom == 0.0) {
    throw ZeroDenominatorError("nmae_signed: mean(|targets|) is zero");
  }
  return (err / static_cast<double>(targets.size())) / denom;
}

double hfov_deg(double focal, double width) {
  if (!(focal > 0.0) || !(width > 0.0)) {
    throw NonPositiveInputError("hfov: focal length and width must be > 0");
  }
  return rad_to_deg(2.0 * std::atan(width / (2.0 * focal)));
}

std::vector<double> hfov_accuracy(std::span<const double> gt_focals,
                                  std::span<const double> pred_focals,
                                  double width,
                                  std::span<const double> thresholds_deg) {
  require_paired(gt_focals, pred_focals, "hfov_accuracy");
  std::vector<double> errors(gt_focals.size());
  for (std::size_t i = 0; i < gt_focals.size(); ++i) {
    errors[i] = std::abs(hfov_deg(pred_focals[i], width) -
                         hfov_deg(gt_focals[i], width));
  }
  std::vector<double> accuracy;
  accuracy.reserve(thresholds_deg.size());
  for (double t : thresholds_deg) {
    std::size_t hits = 0;
    for (double e : errors) {
      if (e <= t) ++hits;
    }
    accuracy.push_back(static_cast<double>(hits) /
                       static_cast<double>(errors.size()));
  }
  for (std::size_t i = 1; i < accuracy.size(); ++i) {
    if (thresholds_deg[i] >= thresholds_deg[i - 1] &&
        accuracy[i] < accuracy[i - 1]) {
      throw Error("hfov_accuracy: non-monotone accuracy");
    }
  }
  return accuracy;
}

EvalTable evaluate_predictions(std::span<const ParamVector13> targets,
                               std::span<const ParamVector13> preds,
                               double width, bool signed_nmae) {
  if (targets.size() != preds.size()) {
    throw ShapeMismatchError("evaluate_predictions: length mismatch");
  }
  if (targets.empty()) {
    throw ShapeMismatchError("evaluate_predictions: empty input");
  }
  const std::size_t n = targets.size();
  EvalTable table;
  table.sample_count = n;

  std::vector<double> t(n), p(n);
  for (std::size_t col = 0; col < kEvalColumns.size(); ++col) {
    const Param param = kEvalColumns[col];
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = targets[i][param];
      p[i] = preds[i][param];
    }
    table.nmae[col] = signed_nmae ? nmae_signed(t, p) : nmae(t, p);
  }

  std::vector<double> gt_f(n), pred_f(n);
  for (std::size_t i = 0; i < n; ++i) {
    gt_f[i] = targets[i][Param::fx];
    pred_f[i] = preds[i][Param::fx];
  }
  std::array<double, kNumHfovThresholds> thresholds{};
  for (int k = 0; k < kNumHfovThresholds; ++k) {
    thresholds[static_cast<std::size_t>(k)] = static_cast<double>(k);
  }
  const std::vector<double> acc = hfov_accuracy(gt_f, pred_f, width, thresholds);
  for (int k = 0; k < kNumHfovThresholds; ++k) {
    table.hfov_accuracy[static_cast<std::size_t>(k)] =
        acc[static_cast<std::size_t>(k)];
  }
  return table;
}

std::string render_eval_table(const EvalTable& table, char delimiter) {
  std::ostringstream out;
  out << "metric";
  for (Param p : kEvalColumns) out << delimiter << param_name(p);
  out << '\n' << "nmae";
  for (std::size_t i = 0; i < table.nmae.size(); ++i) {
    out << delimiter << format_g17(table.nmae[i]);
  }
  out << '\n' << "threshold_deg";
  for (int k = 0; k < kNumHfovThresholds; ++k) out << delimiter << k;
  out << '\n' << "hfov_accuracy";
  for (double a : table.hfov_accuracy) out << delimiter << format_g17(a);
  out << '\n'
      << "sample_count" << delimiter << table.sample_count << '\n';
  return out.str();
}

std::string render_eval_record(const EvalTable& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kEvalColumns.size(); ++i) {
    out << "nmae." << param_name(kEvalColumns[i]) << '='
        << format_g17(table.nmae[i]) << '\n';
  }
  for (int k = 0; k < kNumHfovThresholds; ++k) {
    out << "hfov_accuracy." << k << '='
        << format_g17(table.hfov_accuracy[static_cast<std::size_t>(k)]) << '\n';
  }
  out << "sample_count=" << table.sample_count << '\n';
  return out.str();
}

}  // namespace cplcalib
