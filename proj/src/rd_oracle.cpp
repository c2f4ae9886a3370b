#include "litevp/rd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "litevp/error.hpp"

namespace litevp {

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Three-point one-sided end slope, limited so the end interval stays monotone.
double end_slope(double h0, double h1, double d0, double d1) {
  double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (sign(s) != sign(d0)) {
    s = 0.0;
  } else if (sign(d0) != sign(d1) && std::abs(s) > 3.0 * std::abs(d0)) {
    s = 3.0 * d0;
  }
  return s;
}

std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<double> h(n - 1);
  std::vector<double> delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }

  std::vector<double> d(n, 0.0);
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) {
      d[k] = 0.0;  // local extremum or flat neighbour
      continue;
    }
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

}  // namespace

std::vector<double> isotonic_non_increasing(std::span<const double> values) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
      const Block last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().count += last.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

RdCurve RdCurve::fit(std::span<const RdSample> samples) {
  if (samples.size() < 2) {
    throw InvalidInput("RD curve needs at least 2 samples, got " + std::to_string(samples.size()));
  }
  std::vector<RdSample> sorted(samples.begin(), samples.end());
  for (const RdSample& s : sorted) {
    if (s.qp < 0 || s.qp > 255) throw InvalidInput("RD sample qp out of range [0,255]: " + std::to_string(s.qp));
    if (!std::isfinite(s.vmaf) || s.vmaf < 0.0 || s.vmaf > 100.0) {
      throw InvalidInput("RD sample vmaf out of range [0,100] at qp " + std::to_string(s.qp));
    }
  }
  std::sort(sorted.begin(), sorted.end(), [](const RdSample& a, const RdSample& b) { return a.qp < b.qp; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].qp == sorted[i - 1].qp) {
      throw InvalidInput("duplicate qp in RD samples: " + std::to_string(sorted[i].qp));
    }
  }

  RdCurve c;
  c.knots_qp_.reserve(sorted.size());
  std::vector<double> raw;
  raw.reserve(sorted.size());
  for (const RdSample& s : sorted) {
    c.knots_qp_.push_back(static_cast<double>(s.qp));
    raw.push_back(s.vmaf);
  }
  c.knots_vmaf_ = isotonic_non_increasing(raw);
  c.slopes_ = pchip_slopes(c.knots_qp_, c.knots_vmaf_);

  const std::size_t n = c.knots_qp_.size();
  c.coeffs_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = c.knots_qp_[i + 1] - c.knots_qp_[i];
    const double delta = (c.knots_vmaf_[i + 1] - c.knots_vmaf_[i]) / h;
    const double d0 = c.slopes_[i];
    const double d1 = c.slopes_[i + 1];
    c.coeffs_[i] = {c.knots_vmaf_[i], d0, (3.0 * delta - 2.0 * d0 - d1) / h, (d0 + d1 - 2.0 * delta) / (h * h)};
  }
  return c;
}

std::size_t RdCurve::interval(double qp) const {
  const auto it = std::upper_bound(knots_qp_.begin(), knots_qp_.end(), qp);
  const auto idx = static_cast<std::size_t>(it - knots_qp_.begin());
  return std::min(idx == 0 ? 0 : idx - 1, coeffs_.size() - 1);
}

double RdCurve::evaluate(double qp) const {
  if (!fitted()) throw InternalError("evaluate on an unfitted RD curve");
  if (qp <= knots_qp_.front()) return knots_vmaf_.front();
  if (qp >= knots_qp_.back()) return knots_vmaf_.back();
  const std::size_t i = interval(qp);
  const auto& c = coeffs_[i];
  const double t = qp - knots_qp_[i];
  return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
}

double RdCurve::derivative(double qp) const {
  if (!fitted()) throw InternalError("derivative on an unfitted RD curve");
  if (qp < knots_qp_.front() || qp > knots_qp_.back()) return 0.0;
  const std::size_t i = interval(qp);
  if (qp == knots_qp_[i]) return slopes_[i];
  if (qp == knots_qp_.back()) return slopes_.back();
  const auto& c = coeffs_[i];
  const double t = qp - knots_qp_[i];
  // Rounding can leave a positive residue where the exact slope is 0.
  return std::min(0.0, c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]));
}

TargetQp invert(const RdCurve& curve, double vmaf) {
  if (!curve.fitted()) throw InternalError("invert on an unfitted RD curve");
  if (vmaf > curve.max_vmaf()) return {curve.min_qp(), false};
  if (vmaf < curve.min_vmaf()) return {curve.max_qp(), false};
  if (curve.evaluate(curve.max_qp()) >= vmaf) return {curve.max_qp(), true};

  // Invariant: evaluate(lo) >= vmaf > evaluate(hi). The limit of lo is the
  // largest QP reaching the target, which resolves flat segments upward.
  const auto qps = curve.knots_qp();
  const auto vmafs = curve.knots_vmaf();
  std::size_t k = 0;
  while (k + 2 < vmafs.size() && vmafs[k + 1] >= vmaf) ++k;
  double lo = qps[k];
  double hi = qps[k + 1];
  for (int iter = 0; iter < kMaxBisectionIterations; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (curve.evaluate(mid) >= vmaf) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, true};
}

QualityTargets derive_targets(const RdCurve& curve, QualityTargets targets) {
  for (std::size_t i = 0; i < kNumTargets; ++i) {
    targets.derived_qps[i] = invert(curve, targets.vmaf_targets[i]);
  }
  return targets;
}

}  // namespace litevp
