#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nfb/calibration.hpp"
#include "nfb/error.hpp"
#include "oracles.hpp"

using namespace nfb;

namespace {

std::vector<AttentionSample> trace(const std::vector<double>& values) {
  std::vector<AttentionSample> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({static_cast<double>(i + 1), values[i]});
  return out;
}

}  // namespace

TEST_CASE("baseline of a constant trace") {
  CalibrationConfig cfg;
  CHECK(compute_baseline(trace(std::vector<double>(60, 50.0)), cfg) == 50.0);
}

TEST_CASE("baseline of an alternating trace") {
  CalibrationConfig cfg;
  std::vector<double> v;
  for (int i = 0; i < 60; ++i) v.push_back(i % 2 ? 60.0 : 40.0);
  CHECK(compute_baseline(trace(v), cfg) == 50.0);
}

TEST_CASE("baseline matches an independent mean on a noisy trace") {
  CalibrationConfig cfg;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(31.22, 12.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 60; ++i) v.push_back(std::clamp(d(rng), 0.0, 100.0));
    CHECK(compute_baseline(trace(v), cfg) == doctest::Approx(oracle::two_pass(v).mean).epsilon(1e-12));
  }
}

TEST_CASE("baseline needs min_samples") {
  CalibrationConfig cfg;
  CHECK_THROWS_AS(compute_baseline(trace(std::vector<double>(29, 50.0)), cfg), Error);
  try {
    compute_baseline(trace({}), cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CalibrationIncomplete);
  }
  CHECK_NOTHROW(compute_baseline(trace(std::vector<double>(30, 50.0)), cfg));
}

TEST_CASE("threshold examples") {
  CalibrationConfig cfg;
  auto th = compute_thresholds(50, cfg);
  CHECK(th.t1 == 40);
  CHECK(th.t2 == 65);
  CHECK(th.baseline == 50);
  CHECK(th.source == ThresholdSource::Adaptive);

  th = compute_thresholds(100, cfg);
  CHECK(th.t1 == 80);
  CHECK(th.t2 == 85);

  th = compute_thresholds(5, cfg);
  CHECK(th.t1 == 10);
  CHECK(th.t2 == 20);

  th = compute_thresholds(0, cfg);
  CHECK(th.t1 == 10);
  CHECK(th.t2 == 20);

  th = compute_thresholds(12.5, cfg);
  CHECK(th.t1 == doctest::Approx(10));
  CHECK(th.t2 == doctest::Approx(16.25));
}

TEST_CASE("no clamp inside [LB/alpha, UB/beta]: medium band is b/2 wide") {
  CalibrationConfig cfg;
  for (int k = 1250; k <= 6538; ++k) {
    const double b = k / 100.0;
    const auto th = compute_thresholds(b, cfg);
    CHECK(th.t2 - th.t1 == doctest::Approx(0.5 * b).epsilon(1e-9));
  }
}

TEST_CASE("threshold sweep: ordering, bounds, monotonicity") {
  CalibrationConfig cfg;
  Thresholds prev = compute_thresholds(0, cfg);
  for (int k = 0; k <= 10000; ++k) {
    const double b = k / 100.0;
    const auto th = compute_thresholds(b, cfg);
    REQUIRE(cfg.lower_bound <= th.t1);
    REQUIRE(th.t1 < th.t2);
    REQUIRE(th.t2 <= cfg.upper_bound);
    if (k > 0) {
      REQUIRE(th.t1 >= prev.t1);
      // t2 jumps down only where the repair stops applying and the raw
      // formula takes over; it is monotone on each side.
      if (!(prev.t2 == std::min(cfg.upper_bound, prev.t1 + cfg.repair_width) && prev.t2 > th.t2)) {
        REQUIRE(th.t2 >= prev.t2);
      }
    }
    prev = th;
  }
}

TEST_CASE("manual thresholds") {
  auto th = set_manual_thresholds(41, 67);
  CHECK(th.t1 == 41);
  CHECK(th.t2 == 67);
  CHECK(th.source == ThresholdSource::Manual);
  CHECK_NOTHROW(set_manual_thresholds(0, 100));
  CHECK_THROWS_AS(set_manual_thresholds(50, 50), Error);
  CHECK_THROWS_AS(set_manual_thresholds(60, 50), Error);
  CHECK_THROWS_AS(set_manual_thresholds(-1, 50), Error);
  CHECK_THROWS_AS(set_manual_thresholds(10, 101), Error);
  CHECK_THROWS_AS(set_manual_thresholds(std::nan(""), 50), Error);
  try {
    set_manual_thresholds(50, 50);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
  }
}

TEST_CASE("calibration config validation") {
  CalibrationConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto bad = [](auto mutate) {
    CalibrationConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), Error);
  };
  bad([](CalibrationConfig& c) { c.alpha = 1.0; });
  bad([](CalibrationConfig& c) { c.beta = 0.9; });
  bad([](CalibrationConfig& c) { c.lower_bound = 90; });
  bad([](CalibrationConfig& c) { c.upper_bound = 120; });
  bad([](CalibrationConfig& c) { c.min_samples = 0; });
  bad([](CalibrationConfig& c) { c.calibration_duration_s = 0; });
}
