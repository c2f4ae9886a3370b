#include "litevp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "litevp/error.hpp"

namespace litevp {

using nlohmann::json;

namespace {

constexpr std::array<std::size_t, 4> kHigh = {0, 1, 2, 3};
constexpr std::array<std::size_t, 4> kMedium = {2, 3, 4, 5};
constexpr std::array<std::size_t, 4> kLow = {4, 5, 6, 7};
constexpr std::array<std::size_t, 8> kAll = {0, 1, 2, 3, 4, 5, 6, 7};

// Sums in ascending order so the result does not depend on record order.
double sorted_mean(const std::vector<double>& sorted) {
  double s = 0.0;
  for (double v : sorted) s += v;
  return s / static_cast<double>(sorted.size());
}

ErrorSummary summarize_errors(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  ErrorSummary s;
  s.mean = sorted_mean(v);
  s.median = stats::percentile_sorted(v, 0.5);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

Quartiles quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {v.front(), stats::percentile_sorted(v, 0.25), stats::percentile_sorted(v, 0.5),
          stats::percentile_sorted(v, 0.75), v.back()};
}

ScopeReport scope_report(std::span<const EvalRecord> records, std::span<const std::size_t> targets,
                         const std::string& name, bool per_target_mean) {
  ScopeReport r;
  r.name = name;
  std::vector<double> qp, vmaf;
  std::size_t c2 = 0, c4 = 0;
  for (const auto& rec : records) {
    for (std::size_t t : targets) {
      const auto& o = rec.targets[t];
      qp.push_back(o.qp_err);
      vmaf.push_back(o.vmaf_err);
      c2 += o.vmaf_err <= 2.0;
      c4 += o.vmaf_err <= 4.0;
    }
  }
  r.count = qp.size();
  r.qp = summarize_errors(qp);
  r.vmaf = summarize_errors(vmaf);
  r.coverage2 = static_cast<double>(c2) / static_cast<double>(r.count);
  r.coverage4 = static_cast<double>(c4) / static_cast<double>(r.count);
  if (per_target_mean) {
    double sq = 0.0, sv = 0.0;
    for (std::size_t t : targets) {
      std::vector<double> tq, tv;
      for (const auto& rec : records) {
        tq.push_back(rec.targets[t].qp_err);
        tv.push_back(rec.targets[t].vmaf_err);
      }
      std::sort(tq.begin(), tq.end());
      std::sort(tv.begin(), tv.end());
      sq += sorted_mean(tq);
      sv += sorted_mean(tv);
    }
    r.qp.mean = sq / static_cast<double>(targets.size());
    r.vmaf.mean = sv / static_cast<double>(targets.size());
  }
  return r;
}

void check_record(const EvalRecord& rec) {
  for (std::size_t t = 0; t < kNumTargets; ++t) {
    const auto& o = rec.targets[t];
    for (double v : {o.qp_pred, o.qp_true, o.qp_err, o.vmaf_achieved, o.vmaf_target, o.vmaf_err}) {
      if (!std::isfinite(v))
        throw InvalidInput("eval: non-finite value for " + rec.video_id + " target " + std::to_string(t));
    }
    if (o.qp_err < 0 || o.vmaf_err < 0)
      throw InvalidInput("eval: negative error for " + rec.video_id + " target " + std::to_string(t));
  }
}

json summary_json(const ErrorSummary& s) { return {{"mean", s.mean}, {"median", s.median}, {"std", s.std}}; }

json scope_json(const ScopeReport& s) {
  return {{"name", s.name},
          {"count", s.count},
          {"qp", summary_json(s.qp)},
          {"vmaf", summary_json(s.vmaf)},
          {"coverage2", s.coverage2},
          {"coverage4", s.coverage4}};
}

json quartiles_json(const Quartiles& q) {
  return {{"min", q.min}, {"p25", q.p25}, {"median", q.median}, {"p75", q.p75}, {"max", q.max}};
}

}  // namespace

EvalRecord make_record(std::string video_id, const RdCurve& curve, std::span<const double> qp_pred,
                       std::span<const double> qp_true) {
  if (qp_pred.size() != kNumTargets || qp_true.size() != kNumTargets)
    throw InvalidInput("eval: " + video_id + " needs " + std::to_string(kNumTargets) + " QPs per side");
  if (!curve.fitted()) throw InvalidInput("eval: " + video_id + " has no fitted RD curve");
  EvalRecord r;
  r.video_id = std::move(video_id);
  for (std::size_t t = 0; t < kNumTargets; ++t) {
    auto& o = r.targets[t];
    o.qp_pred = qp_pred[t];
    o.qp_true = qp_true[t];
    o.qp_err = std::fabs(o.qp_pred - o.qp_true);
    o.vmaf_achieved = curve.evaluate(o.qp_pred);
    o.vmaf_target = curve.evaluate(o.qp_true);
    o.vmaf_err = std::fabs(o.vmaf_achieved - o.vmaf_target);
  }
  check_record(r);
  return r;
}

std::span<const std::size_t> band_targets(Band b) {
  switch (b) {
    case Band::kHigh: return kHigh;
    case Band::kMedium: return kMedium;
    case Band::kLow: return kLow;
  }
  throw InternalError("band_targets: bad band");
}

const char* band_name(Band b) {
  switch (b) {
    case Band::kHigh: return "high";
    case Band::kMedium: return "medium";
    case Band::kLow: return "low";
  }
  return "?";
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 48; ++i) t.push_back(0.25 * i);
  return t;
}

std::vector<std::pair<double, double>> cdf_table(std::span<const EvalRecord> records, std::size_t target,
                                                 std::span<const double> thresholds) {
  if (target >= kNumTargets) throw InvalidInput("cdf_table: target index out of range");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw InvalidInput("cdf_table: thresholds must be ascending");
  std::vector<double> errs;
  for (const auto& r : records) errs.push_back(r.targets[target].vmaf_err);
  std::sort(errs.begin(), errs.end());
  std::vector<std::pair<double, double>> out;
  for (double th : thresholds) {
    const auto n = std::upper_bound(errs.begin(), errs.end(), th) - errs.begin();
    out.emplace_back(th, errs.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(errs.size()));
  }
  return out;
}

EvalReport score(std::span<const EvalRecord> records, const ScoreOptions& opts) {
  if (records.empty()) throw InvalidInput("eval: no records");
  for (const auto& r : records) check_record(r);
  const std::vector<double> th = opts.cdf_thresholds.empty() ? default_thresholds() : opts.cdf_thresholds;

  EvalReport rep;
  rep.per_target_mean = opts.per_target_mean;
  rep.videos = records.size();
  rep.overall = scope_report(records, kAll, "overall", opts.per_target_mean);
  for (Band b : kBands)
    rep.bands[static_cast<std::size_t>(b)] = scope_report(records, band_targets(b), band_name(b), opts.per_target_mean);
  for (std::size_t t = 0; t < kNumTargets; ++t) {
    auto& tt = rep.per_target[t];
    tt.target = t;
    tt.cdf = cdf_table(records, t, th);
    std::vector<double> q, v;
    for (const auto& r : records) {
      q.push_back(r.targets[t].qp_err);
      v.push_back(r.targets[t].vmaf_err);
    }
    tt.qp_box = quartiles(q);
    tt.vmaf_box = quartiles(v);
  }
  return rep;
}

std::vector<Outlier> jnd_outliers(std::span<const EvalRecord> records, double jnd) {
  std::vector<Outlier> out;
  for (const auto& r : records) {
    Outlier o{r.video_id, {}, 0.0};
    for (std::size_t t = 0; t < kNumTargets; ++t) {
      o.max_vmaf_err = std::max(o.max_vmaf_err, r.targets[t].vmaf_err);
      if (r.targets[t].vmaf_err >= jnd) o.targets.push_back(t);
    }
    if (!o.targets.empty()) out.push_back(std::move(o));
  }
  return out;
}

json to_json(const EvalReport& r) {
  json j;
  j["mae_mode"] = r.per_target_mean ? "per_target_mean" : "pooled";
  j["videos"] = r.videos;
  j["overall"] = scope_json(r.overall);
  j["bands"] = json::array();
  for (const auto& b : r.bands) j["bands"].push_back(scope_json(b));
  j["per_target"] = json::array();
  for (const auto& t : r.per_target) {
    json cdf = json::array();
    for (const auto& [th, f] : t.cdf) cdf.push_back({th, f});
    j["per_target"].push_back({{"target", t.target},
                               {"vmaf_target", kDefaultVmafTargets[t.target]},
                               {"cdf", cdf},
                               {"qp_box", quartiles_json(t.qp_box)},
                               {"vmaf_box", quartiles_json(t.vmaf_box)}});
  }
  return j;
}

json to_json(std::span<const Outlier> outliers) {
  json j = json::array();
  for (const auto& o : outliers)
    j.push_back({{"video_id", o.video_id}, {"targets", o.targets}, {"max_vmaf_err", o.max_vmaf_err}});
  return j;
}

void write_summary_csv(std::ostream& out, const EvalReport& r) {
  out << "scope,n,qp_mean,qp_median,qp_std,vmaf_mean,vmaf_median,vmaf_std,coverage2,coverage4\n";
  auto row = [&](const ScopeReport& s) {
    out << s.name << ',' << s.count << ',' << s.qp.mean << ',' << s.qp.median << ',' << s.qp.std << ','
        << s.vmaf.mean << ',' << s.vmaf.median << ',' << s.vmaf.std << ',' << s.coverage2 << ',' << s.coverage4
        << '\n';
  };
  row(r.overall);
  for (const auto& b : r.bands) row(b);
}

void write_cdf_csv(std::ostream& out, const EvalReport& r) {
  out << "target,threshold,fraction\n";
  for (const auto& t : r.per_target)
    for (const auto& [th, f] : t.cdf) out << t.target + 1 << ',' << th << ',' << f << '\n';
}

void write_boxplot_csv(std::ostream& out, const EvalReport& r) {
  out << "target,metric,min,p25,median,p75,max\n";
  for (const auto& t : r.per_target) {
    for (const auto& [name, q] : {std::pair{"qp", t.qp_box}, std::pair{"vmaf", t.vmaf_box}})
      out << t.target + 1 << ',' << name << ',' << q.min << ',' << q.p25 << ',' << q.median << ',' << q.p75 << ','
          << q.max << '\n';
  }
}

}  // namespace litevp
