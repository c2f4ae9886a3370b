#pragma once

#include <array>
#include <span>
#include <vector>

namespace litevp {

/// One measured encode: AV1 QP (0..255) and the VMAF it produced.
struct RdSample {
  int qp = 0;
  double vmaf = 0.0;
};

inline constexpr std::size_t kNumTargets = 8;
inline constexpr std::array<double, kNumTargets> kDefaultVmafTargets = {99, 97, 95, 91, 88, 85, 83, 80};

/// Monotone (non-increasing) piecewise-cubic Hermite fit of VMAF over QP.
///
/// Construction applies isotonic repair to the measurements and then
/// Fritsch-Carlson slope limiting, so the interpolant never rises with QP
/// and never overshoots the knot values of the interval it is evaluated in.
/// Outside the measured QP range the curve is held at the boundary knot value.
/// Immutable after construction.
class RdCurve {
 public:
  RdCurve() = default;

  /// Throws InvalidInput for fewer than 2 samples, duplicate QPs, or values
  /// outside 0 <= qp <= 255, 0 <= vmaf <= 100. Samples may come in any order.
  static RdCurve fit(std::span<const RdSample> samples);

  double evaluate(double qp) const;
  /// dVMAF/dQP of the fitted cubic. Knots return their stored slope; outside
  /// the domain the clamped curve is flat and the derivative is 0.
  double derivative(double qp) const;

  bool fitted() const { return knots_qp_.size() >= 2; }
  double min_qp() const { return knots_qp_.front(); }
  double max_qp() const { return knots_qp_.back(); }
  /// VMAF at the lowest QP (the curve maximum).
  double max_vmaf() const { return knots_vmaf_.front(); }
  double min_vmaf() const { return knots_vmaf_.back(); }

  std::span<const double> knots_qp() const { return knots_qp_; }
  /// Knot values after isotonic repair.
  std::span<const double> knots_vmaf() const { return knots_vmaf_; }
  std::span<const double> knot_slopes() const { return slopes_; }

 private:
  std::size_t interval(double qp) const;

  std::vector<double> knots_qp_;
  std::vector<double> knots_vmaf_;
  std::vector<double> slopes_;
  // Per interval: v(t) = c0 + t*(c1 + t*(c2 + t*c3)), t = qp - knots_qp_[i].
  std::vector<std::array<double, 4>> coeffs_;
};

struct TargetQp {
  double qp = 0.0;
  bool reachable = true;
};

struct QualityTargets {
  std::array<double, kNumTargets> vmaf_targets = kDefaultVmafTargets;
  std::array<TargetQp, kNumTargets> derived_qps{};
};

/// Pool-adjacent-violators regression onto non-increasing sequences
/// (equal weights). Exposed for testing.
std::vector<double> isotonic_non_increasing(std::span<const double> values);

/// Largest QP whose interpolated VMAF equals `vmaf`, found by bisection.
/// Targets outside the curve's VMAF range are flagged unreachable and clamped
/// to the boundary knot QP on the same side.
TargetQp invert(const RdCurve& curve, double vmaf);

QualityTargets derive_targets(const RdCurve& curve, QualityTargets targets = {});

inline constexpr double kInversionTolerance = 1e-6;
inline constexpr int kMaxBisectionIterations = 200;

}  // namespace litevp
