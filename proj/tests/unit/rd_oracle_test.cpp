#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "litevp/error.hpp"
#include "litevp/rd_oracle.hpp"
#include "support/generators.hpp"
#include "support/pchip_oracle.hpp"

using litevp::RdCurve;
using litevp::RdSample;

namespace {

RdCurve linear_curve() {
  const std::vector<RdSample> s = {{0, 100.0}, {255, 0.0}};
  return RdCurve::fit(s);
}

}  // namespace

TEST(RdCurve, TwoPointFitIsLinear) {
  const RdCurve c = linear_curve();
  EXPECT_DOUBLE_EQ(c.evaluate(127.5), 50.0);
  EXPECT_NEAR(c.evaluate(51.0), 80.0, 1e-12);
  for (double q : {0.0, 17.0, 51.0, 200.5, 255.0}) {
    EXPECT_NEAR(c.derivative(q), -100.0 / 255.0, 1e-15) << q;
  }
}

TEST(RdCurve, PassesThroughKnots) {
  const std::vector<RdSample> s = {{20, 99.0}, {60, 96.5}, {100, 91.0}, {180, 70.0}, {240, 40.0}};
  const RdCurve c = RdCurve::fit(s);
  EXPECT_EQ(c.evaluate(100.0), 91.0);
  for (const auto& k : s) EXPECT_EQ(c.evaluate(k.qp), k.vmaf);
}

TEST(RdCurve, ClampsOutsideDomain) {
  const std::vector<RdSample> s = {{20, 99.0}, {100, 91.0}, {240, 40.0}};
  const RdCurve c = RdCurve::fit(s);
  EXPECT_EQ(c.evaluate(0.0), 99.0);
  EXPECT_EQ(c.evaluate(255.0), 40.0);
  EXPECT_EQ(c.derivative(5.0), 0.0);
  EXPECT_EQ(c.derivative(250.0), 0.0);
}

TEST(RdCurve, RejectsBadInput) {
  const std::vector<RdSample> one = {{10, 90.0}};
  EXPECT_THROW(RdCurve::fit(one), litevp::InvalidInput);
  const std::vector<RdSample> dup = {{10, 90.0}, {10, 80.0}, {30, 70.0}};
  EXPECT_THROW(RdCurve::fit(dup), litevp::InvalidInput);
  const std::vector<RdSample> qp_range = {{10, 90.0}, {256, 80.0}};
  EXPECT_THROW(RdCurve::fit(qp_range), litevp::InvalidInput);
  const std::vector<RdSample> vmaf_range = {{10, 100.5}, {20, 80.0}};
  EXPECT_THROW(RdCurve::fit(vmaf_range), litevp::InvalidInput);
}

TEST(RdCurve, UnorderedSamplesAreSorted) {
  const std::vector<RdSample> s = {{200, 30.0}, {0, 100.0}, {100, 80.0}};
  const RdCurve c = RdCurve::fit(s);
  EXPECT_EQ(c.min_qp(), 0.0);
  EXPECT_EQ(c.max_qp(), 200.0);
  EXPECT_EQ(c.evaluate(100.0), 80.0);
}

TEST(Isotonic, PoolsViolators) {
  const std::vector<double> raw = {100.0, 90.0, 95.0, 60.0, 61.0, 20.0};
  const auto fixed = litevp::isotonic_non_increasing(raw);
  const std::vector<double> want = {100.0, 92.5, 92.5, 60.5, 60.5, 20.0};
  ASSERT_EQ(fixed.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(fixed[i], want[i]);
}

TEST(RdCurve, LimiterZeroesSlopeAtRepairedExtremum) {
  // Raw data rises between qp 50 and 100; repair makes that interval flat and
  // both of its knots get a zero slope.
  const std::vector<RdSample> s = {{0, 100.0}, {50, 90.0}, {100, 95.0}, {150, 60.0}, {255, 10.0}};
  const RdCurve c = RdCurve::fit(s);
  EXPECT_EQ(c.derivative(50.0), 0.0);
  EXPECT_EQ(c.derivative(100.0), 0.0);
  EXPECT_DOUBLE_EQ(c.evaluate(75.0), 92.5);
}

TEST(RdCurve, DenseSamplingIsMonotoneAndWithinKnotBounds) {
  litevp::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testgen::random_monotone_samples(rng);
    const RdCurve c = RdCurve::fit(s);
    double prev = c.evaluate(c.min_qp());
    for (int i = 1; i <= 10000; ++i) {
      const double q = c.min_qp() + (c.max_qp() - c.min_qp()) * i / 10000.0;
      const double v = c.evaluate(q);
      ASSERT_LE(v, prev) << "trial " << trial << " qp " << q;
      prev = v;
    }
    const auto kq = c.knots_qp();
    const auto kv = c.knots_vmaf();
    for (std::size_t k = 0; k + 1 < kq.size(); ++k) {
      for (int j = 0; j <= 50; ++j) {
        const double v = c.evaluate(kq[k] + (kq[k + 1] - kq[k]) * j / 50.0);
        ASSERT_LE(v, kv[k]);
        ASSERT_GE(v, kv[k + 1]);
      }
    }
  }
}

TEST(RdCurve, MatchesTextbookOracle) {
  litevp::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testgen::random_monotone_samples(rng);
    const RdCurve c = RdCurve::fit(s);
    std::vector<double> x, y;
    for (const auto& k : s) {
      x.push_back(k.qp);
      y.push_back(k.vmaf);
    }
    const oracle::TextbookPchip ref(x, y);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(c.knot_slopes()[k], ref.slopes()[k], 1e-12);
    for (int i = 0; i < 200; ++i) {
      const double q = rng.uniform(c.min_qp(), c.max_qp());
      ASSERT_NEAR(c.evaluate(q), ref(q), 1e-9) << q;
    }
  }
}

TEST(RdCurve, DerivativeMatchesFiniteDifferences) {
  litevp::Rng rng(13);
  int checked = 0;
  while (checked < 1000) {
    const auto s = testgen::random_monotone_samples(rng);
    const RdCurve c = RdCurve::fit(s);
    for (int i = 0; i < 50; ++i, ++checked) {
      const double q = rng.uniform(c.min_qp() + 1e-3, c.max_qp() - 1e-3);
      const double h = 1e-4;
      const double fd = (c.evaluate(q + h) - c.evaluate(q - h)) / (2 * h);
      const double an = c.derivative(q);
      ASSERT_LE(an, 0.0);
      ASSERT_LE(testgen::rel_err(an, fd), 1e-5) << "qp " << q << " analytic " << an << " fd " << fd;
    }
  }
}

TEST(DeriveTargets, LinearInversion) {
  const RdCurve c = linear_curve();
  const auto t = litevp::invert(c, 80.0);
  EXPECT_TRUE(t.reachable);
  EXPECT_NEAR(t.qp, 51.0, 1e-4);
}

TEST(DeriveTargets, UnreachableTargetsClampToBoundaryKnot) {
  const std::vector<RdSample> s = {{10, 97.5}, {100, 85.0}, {200, 82.0}};
  const RdCurve c = RdCurve::fit(s);
  const auto targets = litevp::derive_targets(c);
  EXPECT_FALSE(targets.derived_qps[0].reachable);  // 99
  EXPECT_EQ(targets.derived_qps[0].qp, 10.0);
  EXPECT_FALSE(targets.derived_qps[7].reachable);  // 80
  EXPECT_EQ(targets.derived_qps[7].qp, 200.0);
  EXPECT_TRUE(targets.derived_qps[5].reachable);  // 85
  EXPECT_NEAR(c.evaluate(targets.derived_qps[5].qp), 85.0, 1e-6);
}

TEST(DeriveTargets, FlatSegmentResolvesToLargestQp) {
  const std::vector<RdSample> s = {{0, 100.0}, {100, 90.0}, {200, 90.0}, {255, 50.0}};
  const RdCurve c = RdCurve::fit(s);
  const auto t = litevp::invert(c, 90.0);
  EXPECT_TRUE(t.reachable);
  // The zero slope at the knot leaves a plateau narrower than double
  // resolution of the VMAF value, so the knot is only hit to ~1e-6 QP.
  EXPECT_NEAR(t.qp, 200.0, 1e-5);
  EXPECT_LT(t.qp, 255.0 - 1.0);
}

TEST(DeriveTargets, RoundTripOnRandomCurves) {
  litevp::Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const RdCurve c = RdCurve::fit(testgen::random_monotone_samples(rng));
    const auto targets = litevp::derive_targets(c);
    double prev_qp = -1.0;
    for (std::size_t i = 0; i < litevp::kNumTargets; ++i) {
      const auto& d = targets.derived_qps[i];
      EXPECT_GE(d.qp, prev_qp);
      prev_qp = d.qp;
      if (d.reachable) {
        ASSERT_LE(std::fabs(c.evaluate(d.qp) - targets.vmaf_targets[i]), 1e-6);
      }
    }
  }
}
