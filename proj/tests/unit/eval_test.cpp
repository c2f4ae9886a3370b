#include <gtest/gtest.h>

#include <sstream>

#include "litevp/error.hpp"
#include "litevp/eval.hpp"
#include "support/eval_oracle.hpp"

using namespace litevp;

namespace {

EvalRecord with_vmaf_errors(const std::string& id, std::array<double, kNumTargets> errs) {
  EvalRecord r;
  r.video_id = id;
  for (std::size_t t = 0; t < kNumTargets; ++t) {
    r.targets[t].vmaf_err = errs[t];
    r.targets[t].vmaf_target = 90;
    r.targets[t].vmaf_achieved = 90 - errs[t];
  }
  return r;
}

RdCurve linear_curve() {
  // vmaf = 100 - qp / 2.55 on [0, 255]
  const std::vector<RdSample> s = {{0, 100.0}, {255, 0.0}};
  return RdCurve::fit(s);
}

}  // namespace

TEST(Score, BandFixtureArithmetic) {
  // High band holds targets 1-4.
  const std::vector<EvalRecord> recs = {with_vmaf_errors("a", {0, 1, 3, 5, 0, 0, 0, 0})};
  const EvalReport r = score(recs);
  const ScopeReport& high = r.bands[0];
  EXPECT_EQ(high.name, "high");
  EXPECT_EQ(high.count, 4u);
  EXPECT_EQ(high.vmaf.mean, 2.25);
  EXPECT_EQ(high.coverage2, 0.5);
  EXPECT_EQ(high.coverage4, 0.75);
  EXPECT_EQ(high.vmaf.median, 2.0);
}

TEST(Score, PerfectPredictionsAreZero) {
  const RdCurve c = linear_curve();
  const std::array<double, kNumTargets> qp = {5, 10, 20, 40, 60, 80, 100, 120};
  std::vector<EvalRecord> recs = {make_record("p", c, qp, qp), make_record("q", c, qp, qp)};
  const EvalReport r = score(recs);
  for (const ScopeReport* s : {&r.overall, &r.bands[0], &r.bands[1], &r.bands[2]}) {
    EXPECT_EQ(s->qp.mean, 0.0);
    EXPECT_EQ(s->vmaf.mean, 0.0);
    EXPECT_EQ(s->coverage2, 1.0);
    EXPECT_EQ(s->coverage4, 1.0);
  }
  EXPECT_TRUE(jnd_outliers(recs).empty());
}

TEST(Score, RecordUsesCurveAtBothQps) {
  const RdCurve c = linear_curve();
  const std::array<double, kNumTargets> truth = {10, 20, 30, 40, 50, 60, 70, 80};
  std::array<double, kNumTargets> pred = truth;
  pred[2] = 35.1;  // 5.1 QP over -> 2 VMAF under
  const EvalRecord r = make_record("v", c, pred, truth);
  EXPECT_NEAR(r.targets[2].qp_err, 5.1, 1e-12);
  EXPECT_NEAR(r.targets[2].vmaf_err, 2.0, 1e-12);
  EXPECT_NEAR(r.targets[2].vmaf_achieved, 100 - 35.1 / 2.55, 1e-12);
  EXPECT_EQ(r.targets[0].vmaf_err, 0.0);
}

TEST(Score, EmptyAndNonFiniteRejected) {
  EXPECT_THROW(score({}), InvalidInput);
  auto r = with_vmaf_errors("x", {});
  r.targets[3].qp_err = std::nan("");
  const std::vector<EvalRecord> recs = {r};
  EXPECT_THROW(score(recs), InvalidInput);
}

TEST(Score, MatchesBruteForceOn200Records) {
  Rng rng(2024);
  const auto recs = evaloracle::dyadic_records(rng, 200);
  const EvalReport rep = score(recs);

  std::vector<std::size_t> all = {0, 1, 2, 3, 4, 5, 6, 7};
  const auto check = [&](const ScopeReport& s, const std::vector<std::size_t>& targets) {
    const auto n = evaloracle::naive_scope(recs, targets);
    EXPECT_EQ(s.count, n.n);
    EXPECT_EQ(s.qp.mean, n.qp_mae) << s.name;
    EXPECT_EQ(s.vmaf.mean, n.vmaf_mae) << s.name;
    EXPECT_EQ(s.vmaf.median, n.vmaf_median) << s.name;
    EXPECT_DOUBLE_EQ(s.vmaf.std, n.vmaf_std) << s.name;
    EXPECT_EQ(s.coverage2, n.cov2) << s.name;
    EXPECT_EQ(s.coverage4, n.cov4) << s.name;
    EXPECT_LE(s.coverage2, s.coverage4);
  };
  check(rep.overall, all);
  check(rep.bands[0], {0, 1, 2, 3});
  check(rep.bands[1], {2, 3, 4, 5});
  check(rep.bands[2], {4, 5, 6, 7});

  for (std::size_t t = 0; t < kNumTargets; ++t) {
    const auto& tab = rep.per_target[t].cdf;
    ASSERT_EQ(tab.size(), default_thresholds().size());
    double prev = 0.0;
    for (const auto& [th, f] : tab) {
      EXPECT_EQ(f, evaloracle::naive_cdf(recs, t, th));
      EXPECT_GE(f, prev);
      prev = f;
    }
    std::vector<double> v;
    for (const auto& r : recs) v.push_back(r.targets[t].vmaf_err);
    EXPECT_EQ(rep.per_target[t].vmaf_box.p25, evaloracle::naive_percentile(v, 0.25));
    EXPECT_EQ(rep.per_target[t].vmaf_box.p75, evaloracle::naive_percentile(v, 0.75));
    EXPECT_EQ(rep.per_target[t].vmaf_box.max, *std::max_element(v.begin(), v.end()));
  }
}

TEST(Score, PerTargetMeanFlag) {
  const std::vector<EvalRecord> recs = {with_vmaf_errors("a", {1, 2, 3, 4, 5, 6, 7, 8}),
                                        with_vmaf_errors("b", {3, 2, 1, 0, 1, 2, 3, 4})};
  ScoreOptions opt;
  opt.per_target_mean = true;
  const EvalReport r = score(recs, opt);
  // Equal counts per target make both definitions agree.
  EXPECT_DOUBLE_EQ(r.overall.vmaf.mean, score(recs).overall.vmaf.mean);
  EXPECT_DOUBLE_EQ(r.bands[0].vmaf.mean, (2 + 2 + 2 + 2) / 4.0);
  EXPECT_EQ(to_json(r)["mae_mode"], "per_target_mean");
}

TEST(Score, InvariantUnderPermutation) {
  Rng rng(7);
  auto recs = evaloracle::dyadic_records(rng, 50);
  for (auto& r : recs)
    for (auto& o : r.targets) o.vmaf_err += rng.uniform() * 1e-3;  // non-dyadic sums
  const auto a = to_json(score(recs));
  rng.shuffle(std::span<EvalRecord>(recs));
  EXPECT_EQ(to_json(score(recs)), a);
}

TEST(Cdf, Examples) {
  const std::vector<EvalRecord> recs = {with_vmaf_errors("a", {1}), with_vmaf_errors("b", {1}),
                                        with_vmaf_errors("c", {3})};
  const std::vector<double> th = {0.5, 2.0, 3.0};
  const auto tab = cdf_table(recs, 0, th);
  EXPECT_EQ(tab[0].second, 0.0);
  EXPECT_DOUBLE_EQ(tab[1].second, 2.0 / 3.0);
  EXPECT_EQ(tab[2].second, 1.0);
  const std::vector<double> bad = {2.0, 1.0};
  EXPECT_THROW(cdf_table(recs, 0, bad), InvalidInput);
}

TEST(Outliers, FlagsJndAndListsTargets) {
  Rng rng(3);
  std::vector<EvalRecord> recs;
  for (int i = 0; i < 40; ++i) {
    std::array<double, kNumTargets> e{};
    for (auto& v : e) v = rng.uniform(0, 7);
    recs.push_back(with_vmaf_errors("v" + std::to_string(i), e));
  }
  recs.push_back(with_vmaf_errors("big", {0, 0, 0, 0, 0, 12, 0, 0}));
  const auto out = jnd_outliers(recs);
  std::size_t k = 0;
  for (const auto& r : recs) {
    std::vector<std::size_t> ts;
    for (std::size_t t = 0; t < kNumTargets; ++t)
      if (r.targets[t].vmaf_err >= 6.0) ts.push_back(t);
    if (ts.empty()) continue;
    ASSERT_LT(k, out.size());
    EXPECT_EQ(out[k].video_id, r.video_id);
    EXPECT_EQ(out[k].targets, ts);
    ++k;
  }
  EXPECT_EQ(k, out.size());
  EXPECT_EQ(out.back().video_id, "big");
  EXPECT_EQ(out.back().max_vmaf_err, 12.0);

  const std::vector<EvalRecord> calm = {with_vmaf_errors("a", {5.99, 1, 1, 1, 1, 1, 1, 1})};
  EXPECT_TRUE(jnd_outliers(calm).empty());
}

TEST(Output, CsvLayouts) {
  const std::vector<EvalRecord> recs = {with_vmaf_errors("a", {0, 1, 3, 5, 0, 0, 0, 0})};
  const EvalReport r = score(recs);
  std::ostringstream s, c, b;
  write_summary_csv(s, r);
  write_cdf_csv(c, r);
  write_boxplot_csv(b, r);
  EXPECT_EQ(s.str().substr(0, s.str().find('\n')),
            "scope,n,qp_mean,qp_median,qp_std,vmaf_mean,vmaf_median,vmaf_std,coverage2,coverage4");
  EXPECT_NE(s.str().find("high,4,0,0,0,2.25,2,"), std::string::npos);
  const std::string cs = c.str(), bs = b.str();
  EXPECT_EQ(std::count(cs.begin(), cs.end(), '\n'), 1 + 8 * 49);
  EXPECT_EQ(std::count(bs.begin(), bs.end(), '\n'), 1 + 16);
}
