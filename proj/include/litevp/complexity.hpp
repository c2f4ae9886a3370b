#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "litevp/media_io.hpp"
#include "litevp/stats.hpp"

namespace litevp {

inline constexpr int kDctBlock = 32;

/// Per-frame complexity measures. `tc` is empty for the first frame.
struct FrameComplexity {
  double sc = 0.0;
  std::optional<double> tc;
  double brightness = 0.0;
};

/// Mean per-pixel AC energy of the orthonormal 32x32 DCT-II: the sum of |coef|
/// over all non-DC coefficients of every block, divided by num_blocks * 1024.
/// Partial edge blocks are padded by edge replication.
double frame_sc(const Frame& frame);
double frame_sc(std::span<const double> plane, int width, int height);

/// Mean absolute luma difference. Throws InvalidInput when geometry or depth differ.
double frame_tc(const Frame& frame, const Frame& prev);

double frame_brightness(const Frame& frame);

/// SC, TC (vs. the previous frame) and brightness for every frame in order.
std::vector<FrameComplexity> analyze_frames(std::span<const Frame> frames);

enum class Metric { kSc = 0, kTc = 1, kBrightness = 2 };
enum class Partition { kIntra = 0, kInter = 1 };

/// The 42 aggregated complexity features: {SC, TC, brightness} x {I, non-I}
/// x {mean, std, min, max, p25, p50, p75}, flattened in that order.
struct ComplexityStats {
  static constexpr std::size_t kSize = 42;

  std::array<stats::Summary, 6> groups{};
  /// False when the partition had no defined values; its summary is then zero.
  std::array<bool, 6> valid{};

  const stats::Summary& get(Metric m, Partition p) const {
    return groups[static_cast<std::size_t>(m) * 2 + static_cast<std::size_t>(p)];
  }
  std::array<double, kSize> to_array() const;
  static ComplexityStats from_array(std::span<const double> values);
};

/// Frame 0 carries no TC and is left out of TC statistics. Throws InvalidInput
/// for empty input, mismatched list lengths, or no I-frame.
ComplexityStats aggregate(std::span<const FrameComplexity> per_frame, const std::vector<bool>& iframe_flags);

/// Offsets of the statistics inside ComplexityStats::to_array().
constexpr std::size_t complexity_offset(Metric m, Partition p) {
  return (static_cast<std::size_t>(m) * 2 + static_cast<std::size_t>(p)) * 7;
}

}  // namespace litevp
