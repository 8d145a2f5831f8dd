#include <doctest.h>

#include "diffad/detector.hpp"
#include "diffad/evaluation.hpp"
#include "oracles.hpp"

using namespace diffad;

TEST_CASE("residual is the elementwise magnitude") {
  const NdArray x({2}, std::vector<double>{1, 4}), xh({2}, std::vector<double>{2, 2});
  const NdArray s = residual(x, xh);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 2.0);
  CHECK(residual(xh, x) == s);
  CHECK(residual(x, x) == NdArray({2}));
  CHECK_THROWS_AS(residual(x, NdArray({3})), ShapeError);
}

TEST_CASE("z-score hand case") {
  const std::vector<double> ref{0, 0, 0, 10};
  const FeatureStats st = fit_residual_stats(ref, false);
  CHECK(st.center == 0.0);
  CHECK(st.sigma == doctest::Approx(4.330127).epsilon(1e-6));
  const std::vector<double> s{10, 0};
  const auto z = zscore(s, st);
  CHECK(std::round(z[0] * 1e4) / 1e4 == doctest::Approx(2.3094).epsilon(1e-12));
  CHECK(z[1] == 0.0);
  const std::vector<double> c(5, 2.0);
  const FeatureStats cs = fit_residual_stats(c, false);
  CHECK(cs.constant);
  CHECK(cs.sigma == kSigmaFloor);
  CHECK(zscore(std::vector<double>{9.0}, cs)[0] == 0.0);
  CHECK_THROWS(fit_residual_stats(std::vector<double>{}, false));
}

TEST_CASE("thresholds and strict flags") {
  const std::vector<double> z{-1, 1, -1, 1};
  const Threshold t = compute_threshold(z, 3.0);
  CHECK(t.z_mean == 0.0);
  CHECK(t.z_std == 1.0);
  CHECK(t.value == 3.0);
  CHECK(compute_threshold(z, 0.0).value == 0.0);
  CHECK(compute_threshold(z, 2.0).value < compute_threshold(z, 2.5).value);
  CHECK_THROWS(compute_threshold(std::vector<double>{}, 3.0));
  const auto f = flag_anomalies(std::vector<double>{-5, 0, 5, 3, -3}, 3.0);
  CHECK(f == std::vector<std::uint8_t>{1, 0, 1, 0, 0});
  const std::vector<std::uint8_t> grid{0, 1, 0, 0, 0, 0, 0, 1};
  CHECK(aggregate_flags(grid, 2) == std::vector<std::uint8_t>{0, 1, 0, 1});
  CHECK(aggregate_flags(grid, 1) == grid);
}

TEST_CASE("flags are invariant under joint rescaling") {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    std::vector<double> ref(50), s(20), ref_c(50), s_c(20);
    for (std::size_t i = 0; i < ref.size(); ++i) ref_c[i] = c * (ref[i] = std::abs(rng.normal()));
    for (std::size_t i = 0; i < s.size(); ++i) s_c[i] = c * (s[i] = std::abs(rng.normal()) * 2.0);
    const FeatureStats a = fit_residual_stats(ref, false), b = fit_residual_stats(ref_c, false);
    const auto za = zscore(ref, a), zb = zscore(ref_c, b);
    const double ta = compute_threshold(za, 3.0).value, tb = compute_threshold(zb, 3.0).value;
    const auto fa = flag_anomalies(zscore(s, a), ta), fb = flag_anomalies(zscore(s_c, b), tb);
    CHECK(fa == fb);
  }
}

TEST_CASE("detector report is self-consistent") {
  Rng rng(2);
  NdArray ref({2, 200}), test({2, 100});
  for (auto& v : ref.values()) v = std::abs(rng.normal());
  for (auto& v : test.values()) v = std::abs(rng.normal());
  test.at(0, 50) = 20.0;
  std::vector<std::uint8_t> covered(100, 1);
  covered[99] = 0;
  test.at(1, 99) = 50.0;
  DetectorConfig cfg;
  cfg.k_per_feature = {3.0, 4.0};
  const ZScoreStats st = fit_detector(ref, {}, cfg);
  CHECK(st.features[1].k == 4.0);
  const DetectionReport r = detect(test, covered, st);
  CHECK(r.flags[50] == 1);
  CHECK(r.flags[100 + 99] == 0);
  CHECK(r.aggregate[50] == 1);
  for (std::size_t f = 0; f < 2; ++f) {
    CHECK(r.thresholds[f] == st.features[f].threshold());
    for (std::size_t t = 0; t < 100; ++t) {
      const std::size_t i = f * 100 + t;
      if (covered[t]) CHECK(r.flags[i] == (std::abs(r.z[i]) > r.thresholds[f] ? 1 : 0));
    }
  }
  // robust scale changes sigma but not decisions
  cfg.robust_scale = true;
  const DetectionReport rr = detect(test, covered, fit_detector(ref, {}, cfg));
  CHECK(rr.flags == r.flags);
  cfg.k_per_feature = {1.0};
  CHECK_THROWS(cfg.validate(2));
  cfg.k_per_feature = {-1.0, 1.0};
  CHECK_THROWS(cfg.validate(2));
}

TEST_CASE("confusion counts") {
  const std::vector<std::uint8_t> y{1, 1, 0, 0}, yh{1, 0, 1, 0};
  const ConfusionCounts c = confusion_counts(y, yh);
  CHECK(c == ConfusionCounts{1, 1, 1, 1});
  CHECK(confusion_counts(std::vector<std::uint8_t>(7, 0), std::vector<std::uint8_t>(7, 0)).tn == 7);
  CHECK_THROWS_AS(confusion_counts(y, std::vector<std::uint8_t>{1, 0}), ShapeError);
  CHECK_THROWS_AS(confusion_counts(y, std::vector<std::uint8_t>{2, 0, 0, 0}), std::invalid_argument);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.uniform_int(1, 60);
    std::vector<std::uint8_t> a(n), b(n);
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform() < 0.3;
      b[i] = rng.uniform() < 0.3;
      (a[i] ? (b[i] ? tp : fn) : (b[i] ? fp : tn)) += 1;
    }
    const ConfusionCounts k = confusion_counts(a, b);
    CHECK(k == ConfusionCounts{tp, fp, fn, tn});
    CHECK(k.total() == n);
  }
  // covered restriction on a K*N grid
  const std::vector<std::uint8_t> g{1, 0, 1, 1}, gh{1, 1, 0, 1}, cov{1, 0};
  CHECK(confusion_counts(g, gh, 2, cov) == ConfusionCounts{1, 0, 1, 0});
}

TEST_CASE("metrics formulas and conventions") {
  const MetricsResult m = metrics({2, 1, 1, 0});
  CHECK(m.precision == 2.0 / 3.0);
  CHECK(m.recall == 2.0 / 3.0);
  CHECK(m.f1 == 2.0 / 3.0);
  const MetricsResult u = metrics({0, 0, 3, 5});
  CHECK(u.precision == 0.0);
  CHECK(u.is_undefined("precision"));
  CHECK(u.recall == 0.0);
  CHECK(u.f1 == 0.0);
  const MetricsResult none = metrics({0, 0, 0, 4});
  CHECK(none.is_undefined("recall"));
  CHECK(none.is_undefined("f1"));
  for (std::uint64_t tp = 0; tp <= 20; ++tp)
    for (std::uint64_t fp = 0; tp + fp <= 20; ++fp)
      for (std::uint64_t fn = 0; tp + fp + fn <= 20; ++fn) {
        const MetricsResult r = metrics({tp, fp, fn, 0});
        const auto o = oracle::textbook_prf(tp, fp, fn);
        CHECK(std::abs(r.precision - o.p) <= 1e-15);
        CHECK(std::abs(r.recall - o.r) <= 1e-15);
        CHECK(std::abs(r.f1 - o.f1) <= 1e-12);
        if (tp > 0) CHECK((r.f1 <= std::max(r.precision, r.recall) + 1e-15 && r.f1 >= std::min(r.precision, r.recall) - 1e-15));
      }
  const auto j = to_json(m);
  for (const char* key : {"precision", "recall", "f1", "tp", "fp", "fn", "tn", "undefined_flags"}) CHECK(j.contains(key));
}
