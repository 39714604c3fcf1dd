#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cplcalib/loss.hpp"
#include "oracles.hpp"

using namespace cplcalib;

namespace {

CorrespondenceSet to_set(const std::vector<oracle::Obs>& obs) {
  CorrespondenceSet set;
  for (const oracle::Obs& o : obs) {
    PixelObservation px{o.u, o.v, std::nullopt};
    if (o.has_disparity) px.disparity = o.disparity;
    set.observations.push_back(px);
  }
  return set;
}

std::vector<oracle::Obs> random_obs_list(Rng& rng, int n, bool with_disparity) {
  std::vector<oracle::Obs> obs;
  for (int i = 0; i < n; ++i) {
    obs.push_back(oracle::random_obs(rng, with_disparity));
  }
  return obs;
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("identical parameters give zero loss") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const ParamVector13 p = oracle::random_cvgl_params(rng);
    const auto obs = random_obs_list(rng, 8, i % 2 == 0);
    CHECK(cpl_loss(p, p, to_set(obs)) == 0.0);
  }
}

TEST_CASE("tx shift moves only the X coordinate: loss = |delta|/3") {
  Rng rng(11);
  ParamVector13 gt = oracle::random_cvgl_params(rng);
  gt[Param::theta_p] = 0.0;
  ParamVector13 pred = gt;
  const double delta = 0.7;
  pred[Param::tx] += delta;
  const auto obs = random_obs_list(rng, 1, true);
  CHECK(cpl_loss(gt, pred, to_set(obs)) ==
        doctest::Approx(delta / 3.0).epsilon(1e-14));
}

TEST_CASE("matches the naive double-loop oracle") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const ParamVector13 gt = oracle::random_cvgl_params(rng);
    const ParamVector13 pred = oracle::random_cvgl_params(rng);
    const auto obs = random_obs_list(rng, 50, trial % 2 == 0);
    const double got = cpl_loss(gt, pred, to_set(obs));
    const double expected = oracle::cpl(gt, pred, obs);
    CHECK(std::abs(got - expected) <=
          1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("symmetric in its arguments") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const ParamVector13 a = oracle::random_cvgl_params(rng);
    const ParamVector13 b = oracle::random_cvgl_params(rng);
    const auto obs = random_obs_list(rng, 10, true);
    CHECK(cpl_loss(a, b, to_set(obs)) == cpl_loss(b, a, to_set(obs)));
  }
}

TEST_CASE("empty correspondence set is rejected") {
  Rng rng(19);
  const ParamVector13 p = oracle::random_cvgl_params(rng);
  CHECK_THROWS_AS(cpl_loss(p, p, CorrespondenceSet{}), ShapeMismatchError);
}

TEST_CASE("decomposition of equal vectors is all zero") {
  Rng rng(23);
  const ParamVector13 p = oracle::random_cvgl_params(rng);
  const auto obs = random_obs_list(rng, 6, true);
  const LossReport r = decomposed_loss(p, p, to_set(obs));
  CHECK(r.total == 0.0);
  for (double term : r.per_param) CHECK(term == 0.0);
}

TEST_CASE("single-component perturbation gives exactly one nonzero term") {
  Rng rng(29);
  const ParamVector13 gt = oracle::random_cvgl_params(rng);
  ParamVector13 pred = gt;
  pred[Param::fy] *= 1.07;
  const auto obs = random_obs_list(rng, 6, true);
  const LossReport r = decomposed_loss(gt, pred, to_set(obs));
  const auto fy_index = static_cast<std::size_t>(Param::fy);
  for (std::size_t k = 0; k < kNumParams; ++k) {
    if (k == fy_index) {
      CHECK(r.per_param[k] > 0.0);
    } else {
      CHECK(r.per_param[k] == 0.0);
    }
  }
  CHECK(r.total == r.per_param[fy_index] / 13.0);
}

TEST_CASE("every hybrid term matches an explicit construction") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamVector13 gt = oracle::random_cvgl_params(rng);
    const ParamVector13 pred = oracle::random_cvgl_params(rng);
    const auto obs = random_obs_list(rng, 12, true);
    const LossReport r = decomposed_loss(gt, pred, to_set(obs));
    const auto expected = oracle::decomposed(gt, pred, obs);
    double mean = 0.0;
    for (std::size_t k = 0; k < kNumParams; ++k) {
      CHECK(std::abs(r.per_param[k] - expected[k]) <=
            1e-12 * std::max(1.0, std::abs(expected[k])));
      mean += r.per_param[k];
    }
    mean /= 13.0;
    CHECK(std::abs(r.total - mean) <= 1e-12 * std::max(1.0, mean));
  }
}

TEST_CASE("weighted decomposition total") {
  Rng rng(37);
  const ParamVector13 gt = oracle::random_cvgl_params(rng);
  const ParamVector13 pred = oracle::random_cvgl_params(rng);
  const auto obs = random_obs_list(rng, 5, true);
  std::array<double, kNumParams> w{};
  for (auto& x : w) x = rng.uniform(0.1, 2.0);
  const LossReport r = decomposed_loss(gt, pred, to_set(obs), w);
  double expected = 0.0;
  for (std::size_t k = 0; k < kNumParams; ++k) {
    expected += w[k] * r.per_param[k];
  }
  CHECK(r.total == doctest::Approx(expected).epsilon(1e-14));
  REQUIRE(r.weights.has_value());
  CHECK(*r.weights == w);
}

TEST_CASE("loss is minimized at the ground truth along every parameter axis") {
  Rng rng(41);
  ParamVector13 gt = oracle::random_cvgl_params(rng);
  // Ensure every sweep registers: b away from zero, generic pixels, and no
  // per-point disparity so the scalar d drives the chain.
  gt[Param::b] = -80.0;
  const auto obs = random_obs_list(rng, 8, false);
  const CorrespondenceSet set = to_set(obs);

  const std::array<double, 5> offsets = {-0.4, -0.1, 0.0, 0.1, 0.4};
  for (int k = 0; k < kNumCameraParams; ++k) {
    const double scale = std::max(0.5, 0.2 * std::abs(gt.at(k)));
    for (double off : offsets) {
      ParamVector13 swept = gt;
      swept.at(k) += off * scale;
      if (k == static_cast<int>(Param::d) &&
          std::abs(swept[Param::d]) < 0.1) {
        continue;  // keep out of the guard band
      }
      const double loss = cpl_loss(gt, swept, set);
      if (off == 0.0) {
        CHECK(loss == 0.0);
      } else {
        CHECK(loss > 0.0);
      }
    }
  }
}

TEST_CASE("adaptive weights: equal losses give unit weights") {
  AdaptiveWeights aw(0.9);
  std::array<double, kNumParams> losses{};
  losses.fill(3.7);
  aw.update(losses);
  double sum = 0.0;
  for (double w : aw.weights()) {
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    sum += w;
  }
  CHECK(sum == doctest::Approx(13.0).epsilon(1e-13));
}

TEST_CASE("adaptive weights order inversely to the loss magnitudes") {
  AdaptiveWeights aw(0.5);
  std::array<double, kNumParams> losses{};
  for (int k = 0; k < kNumParams; ++k) {
    losses[static_cast<std::size_t>(k)] = 1.0 + k;
  }
  losses[4] = 10.0 * 13.0;  // one dominating term
  for (int i = 0; i < 50; ++i) aw.update(losses);

  const auto& w = aw.weights();
  const auto& ema = aw.ema();
  CHECK(*std::min_element(w.begin(), w.end()) == w[4]);
  for (std::size_t i = 0; i < kNumParams; ++i) {
    for (std::size_t j = 0; j < kNumParams; ++j) {
      if (ema[i] < ema[j]) CHECK(w[i] > w[j]);
    }
  }
}

TEST_CASE("adaptive weights converge under constant losses") {
  AdaptiveWeights aw(0.99);
  std::array<double, kNumParams> losses{};
  Rng rng(43);
  for (auto& l : losses) l = rng.uniform(0.1, 50.0);
  std::array<double, kNumParams> prev{};
  for (int i = 0; i < 5000; ++i) {
    prev = aw.weights();
    aw.update(losses);
  }
  for (std::size_t k = 0; k < kNumParams; ++k) {
    CHECK(std::abs(aw.weights()[k] - prev[k]) < 1e-9);
  }
}

TEST_CASE("adaptive weights always sum to 13 and stay positive") {
  AdaptiveWeights aw(0.99);
  Rng rng(47);
  for (int i = 0; i < 200; ++i) {
    std::array<double, kNumParams> losses{};
    for (auto& l : losses) l = rng.uniform(0.0, 1e4);
    aw.update(losses);
    double sum = 0.0;
    for (double w : aw.weights()) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 13.0) < 1e-12);
  }
}

TEST_CASE("decay outside (0,1) is rejected") {
  CHECK_THROWS_AS(AdaptiveWeights(0.0), Error);
  CHECK_THROWS_AS(AdaptiveWeights(1.0), Error);
}

}  // TEST_SUITE
