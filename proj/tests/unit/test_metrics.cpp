#include <doctest.h>

#include <cmath>
#include <vector>

#include "cplcalib/metrics.hpp"
#include "oracles.hpp"

using namespace cplcalib;

TEST_SUITE("metrics") {

TEST_CASE("nmae basics") {
  const std::vector<double> t{1.0, 2.0, 3.0};
  CHECK(nmae(t, t) == 0.0);
  const std::vector<double> p{2.0, 3.0, 4.0};
  CHECK(nmae(t, p) == 0.5);

  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(nmae(zeros, p), ZeroDenominatorError);
  const std::vector<double> short_vec{1.0};
  CHECK_THROWS_AS(nmae(t, short_vec), ShapeMismatchError);
  CHECK_THROWS_AS(nmae({}, {}), ShapeMismatchError);
}

TEST_CASE("nmae is scale covariant") {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> t(20), p(20);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = rng.uniform(-10.0, 10.0);
      p[i] = rng.uniform(-10.0, 10.0);
    }
    const double base = nmae(t, p);
    const double s = rng.uniform(0.1, 100.0);
    std::vector<double> ts = t, ps = p;
    for (std::size_t i = 0; i < t.size(); ++i) {
      ts[i] *= s;
      ps[i] *= s;
    }
    CHECK(oracle::rel_err(base, nmae(ts, ps)) < 1e-12);
  }
}

TEST_CASE("signed nmae keeps the error sign") {
  const std::vector<double> t{2.0, 2.0};
  const std::vector<double> low{1.0, 1.0};
  const std::vector<double> high{3.0, 3.0};
  CHECK(nmae_signed(t, low) == -0.5);
  CHECK(nmae_signed(t, high) == 0.5);
  CHECK(nmae(t, low) == 0.5);
}

TEST_CASE("hfov fixture and monotonicity") {
  CHECK(std::abs(hfov_deg(7.25, 14.5) - 90.0) < 1e-12);
  CHECK(std::abs(hfov_deg(1.0, 2.0) - 90.0) < 1e-12);

  // Strictly decreasing in f, increasing in w; tends to zero for long lenses.
  double prev = hfov_deg(1.0, 112.0);
  for (double f = 2.0; f < 4000.0; f *= 1.7) {
    const double cur = hfov_deg(f, 112.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 2.0);
  CHECK(hfov_deg(100.0, 60.0) < hfov_deg(100.0, 61.0));

  // Published Tsinghua-Daimler focal length with a 2048-wide sensor.
  const double expected = oracle::hfov(2282.864, 2048.0);
  CHECK(hfov_deg(2282.864, 2048.0) == doctest::Approx(expected).epsilon(1e-13));

  CHECK_THROWS_AS(hfov_deg(0.0, 10.0), NonPositiveInputError);
  CHECK_THROWS_AS(hfov_deg(10.0, -1.0), NonPositiveInputError);
}

TEST_CASE("hfov accuracy steps") {
  const std::vector<double> thresholds{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> gt{50.0, 80.0, 110.0};

  SUBCASE("perfect predictions hit every threshold including zero") {
    const auto acc = hfov_accuracy(gt, gt, 112.0, thresholds);
    for (double a : acc) CHECK(a == 1.0);
  }

  SUBCASE("uniform 1.5 degree error") {
    const double w = 112.0;
    std::vector<double> pred;
    for (double f : gt) {
      const double target = hfov_deg(f, w) - 1.5;
      pred.push_back(w / (2.0 * std::tan(deg_to_rad(target) / 2.0)));
    }
    const auto acc = hfov_accuracy(gt, pred, w, thresholds);
    CHECK(acc[0] == 0.0);
    CHECK(acc[1] == 0.0);
    for (std::size_t i = 2; i < acc.size(); ++i) CHECK(acc[i] == 1.0);
  }
}

TEST_CASE("hfov accuracy matches the counting oracle and stays monotone") {
  Rng rng(73);
  const std::vector<double> thresholds{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> gt(40), pred(40);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt[i] = rng.uniform(15.005, 120.092);
      pred[i] = gt[i] + rng.uniform(-20.0, 20.0);
      if (pred[i] <= 1.0) pred[i] = 1.0;
    }
    const auto acc = hfov_accuracy(gt, pred, 112.0, thresholds);
    const auto expected = oracle::hfov_accuracy(gt, pred, 112.0, thresholds);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      CHECK(acc[i] == doctest::Approx(expected[i]).epsilon(1e-12));
      if (i > 0) CHECK(acc[i] >= acc[i - 1]);
    }
  }
}

TEST_CASE("evaluate_predictions on a perfect predictor") {
  Rng rng(79);
  std::vector<ParamVector13> targets;
  for (int i = 0; i < 10; ++i) {
    targets.push_back(oracle::random_cvgl_params(rng));
  }
  const EvalTable table = evaluate_predictions(targets, targets, 112.0);
  CHECK(table.sample_count == 10);
  for (double v : table.nmae) CHECK(v == 0.0);
  for (double a : table.hfov_accuracy) CHECK(a == 1.0);
}

TEST_CASE("mean predictor lands near unit NMAE when spread matches scale") {
  // Two-point mixture whose mean absolute deviation is close to its mean
  // magnitude; the regime where the published Average row sits near 1.
  std::vector<ParamVector13> targets;
  ParamVector13 low, high;
  for (int k = 0; k < kNumParams; ++k) {
    low.at(k) = 1.0;
    high.at(k) = 1.0;
  }
  low[Param::fx] = 15.005;
  high[Param::fx] = 120.092;
  for (int i = 0; i < 75; ++i) targets.push_back(low);
  for (int i = 0; i < 25; ++i) targets.push_back(high);

  ParamVector13 mean;
  for (int k = 0; k < kNumParams; ++k) {
    double s = 0.0;
    for (const auto& t : targets) s += t.at(k);
    mean.at(k) = s / static_cast<double>(targets.size());
  }
  std::vector<ParamVector13> preds(targets.size(), mean);
  const EvalTable table = evaluate_predictions(targets, preds, 112.0);
  CHECK(table.nmae[0] > 0.7);
  CHECK(table.nmae[0] < 1.3);
}

TEST_CASE("renderings carry the published column order") {
  EvalTable table;
  table.sample_count = 3;
  for (std::size_t i = 0; i < table.nmae.size(); ++i) {
    table.nmae[i] = static_cast<double>(i);
  }
  const std::string text = render_eval_table(table);
  CHECK(text.find("metric,fx,fy,u0,v0,b,d,tx,ty,tz,theta_p") == 0);
  const std::string record = render_eval_record(table);
  CHECK(record.find("nmae.fx=0") != std::string::npos);
  CHECK(record.find("nmae.theta_p=9") != std::string::npos);
  CHECK(record.find("sample_count=3") != std::string::npos);
}

}  // TEST_SUITE
