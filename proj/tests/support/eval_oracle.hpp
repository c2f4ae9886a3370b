#pragma once

// Brute-force recount of the evaluation report, used by eval_test and the
// acceptance runner. Loops over records in input order; medians and
// quartiles come from a full sort with explicit index arithmetic.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "litevp/eval.hpp"
#include "litevp/rng.hpp"

namespace evaloracle {

inline double naive_percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Naive {
  double qp_mae = 0, vmaf_mae = 0, vmaf_median = 0, vmaf_std = 0, cov2 = 0, cov4 = 0;
  std::size_t n = 0;
};

inline Naive naive_scope(const std::vector<litevp::EvalRecord>& recs, const std::vector<std::size_t>& targets) {
  Naive r;
  double sq = 0, sv = 0;
  std::size_t c2 = 0, c4 = 0;
  std::vector<double> all;
  for (const auto& rec : recs)
    for (std::size_t t : targets) {
      sq += rec.targets[t].qp_err;
      sv += rec.targets[t].vmaf_err;
      if (rec.targets[t].vmaf_err <= 2) ++c2;
      if (rec.targets[t].vmaf_err <= 4) ++c4;
      all.push_back(rec.targets[t].vmaf_err);
      ++r.n;
    }
  r.qp_mae = sq / r.n;
  r.vmaf_mae = sv / r.n;
  r.cov2 = double(c2) / r.n;
  r.cov4 = double(c4) / r.n;
  r.vmaf_median = naive_percentile(all, 0.5);
  double ss = 0;
  for (double e : all) ss += (e - r.vmaf_mae) * (e - r.vmaf_mae);
  r.vmaf_std = std::sqrt(ss / r.n);
  return r;
}

inline double naive_cdf(const std::vector<litevp::EvalRecord>& recs, std::size_t t, double th) {
  std::size_t k = 0;
  for (const auto& r : recs)
    if (r.targets[t].vmaf_err <= th) ++k;
  return double(k) / recs.size();
}

// Errors are multiples of 1/64 below 16, so every sum is exact in double
// and means agree bit for bit regardless of summation order.
inline std::vector<litevp::EvalRecord> dyadic_records(litevp::Rng& rng, std::size_t n) {
  std::vector<litevp::EvalRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].video_id = "r" + std::to_string(i);
    for (auto& o : out[i].targets) {
      o.qp_true = static_cast<double>(rng.below(256));
      o.qp_err = static_cast<double>(rng.below(16 * 64)) / 64.0;
      o.qp_pred = o.qp_true + o.qp_err;
      o.vmaf_err = static_cast<double>(rng.below(10 * 64)) / 64.0;
      o.vmaf_target = 90.0;
      o.vmaf_achieved = o.vmaf_target - o.vmaf_err;
    }
  }
  return out;
}

}  // namespace evaloracle
