#include "litevp/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "litevp/error.hpp"

namespace litevp {

namespace {

using Block = std::array<double, kDctBlock * kDctBlock>;

// basis[k * N + n] = alpha_k * cos(pi * (2n + 1) * k / 2N)
const Block& dct_basis() {
  static const Block basis = [] {
    Block b{};
    constexpr int n = kDctBlock;
    for (int k = 0; k < n; ++k) {
      const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int i = 0; i < n; ++i) {
        b[k * n + i] = alpha * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
      }
    }
    return b;
  }();
  return basis;
}

// Sum of |coef| over the AC coefficients of the 2-D DCT-II of `block`.
double ac_energy(const Block& block) {
  constexpr int n = kDctBlock;
  const Block& c = dct_basis();
  Block rows{};  // rows[r][k] = sum_m block[r][m] * c[k][m]
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) acc += block[r * n + m] * c[k * n + m];
      rows[r * n + k] = acc;
    }
  }
  double energy = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      if (k == 0 && l == 0) continue;
      double acc = 0.0;
      for (int r = 0; r < n; ++r) acc += c[k * n + r] * rows[r * n + l];
      energy += std::abs(acc);
    }
  }
  return energy;
}

void check_same_geometry(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height || a.bit_depth != b.bit_depth) {
    throw InvalidInput("frame geometry mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) + "@" +
                       std::to_string(a.bit_depth) + " vs " + std::to_string(b.width) + "x" +
                       std::to_string(b.height) + "@" + std::to_string(b.bit_depth));
  }
}

}  // namespace

double frame_sc(std::span<const double> plane, int width, int height) {
  if (width < 1 || height < 1 || plane.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidInput("frame_sc: plane size does not match dimensions");
  }
  const int bx = (width + kDctBlock - 1) / kDctBlock;
  const int by = (height + kDctBlock - 1) / kDctBlock;
  double total = 0.0;
  Block block{};
  for (int j = 0; j < by; ++j) {
    for (int i = 0; i < bx; ++i) {
      double sum = 0.0;
      for (int r = 0; r < kDctBlock; ++r) {
        const int y = std::min(j * kDctBlock + r, height - 1);
        for (int m = 0; m < kDctBlock; ++m) {
          const int x = std::min(i * kDctBlock + m, width - 1);
          block[r * kDctBlock + m] = plane[static_cast<std::size_t>(y) * width + x];
          sum += block[r * kDctBlock + m];
        }
      }
      // Removing the mean only changes the DC term. For integer samples the
      // mean is exact, so a constant offset leaves the AC energy bit-identical.
      const double mean = sum / (kDctBlock * kDctBlock);
      for (double& v : block) v -= mean;
      total += ac_energy(block);
    }
  }
  return total / (static_cast<double>(bx) * by * kDctBlock * kDctBlock);
}

double frame_sc(const Frame& frame) {
  std::vector<double> plane(frame.luma.begin(), frame.luma.end());
  return frame_sc(plane, frame.width, frame.height);
}

double frame_tc(const Frame& frame, const Frame& prev) {
  check_same_geometry(frame, prev);
  double sad = 0.0;
  for (std::size_t i = 0; i < frame.luma.size(); ++i) {
    sad += std::abs(static_cast<double>(frame.luma[i]) - static_cast<double>(prev.luma[i]));
  }
  return sad / static_cast<double>(frame.luma.size());
}

double frame_brightness(const Frame& frame) {
  double sum = 0.0;
  for (auto v : frame.luma) sum += v;
  return sum / static_cast<double>(frame.luma.size());
}

std::vector<FrameComplexity> analyze_frames(std::span<const Frame> frames) {
  std::vector<FrameComplexity> out(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out[i].sc = frame_sc(frames[i]);
    out[i].brightness = frame_brightness(frames[i]);
    if (i > 0) out[i].tc = frame_tc(frames[i], frames[i - 1]);
  }
  return out;
}

std::array<double, ComplexityStats::kSize> ComplexityStats::to_array() const {
  std::array<double, kSize> out{};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& s = groups[g];
    const std::array<double, 7> v = {s.mean, s.std, s.min, s.max, s.p25, s.p50, s.p75};
    std::copy(v.begin(), v.end(), out.begin() + static_cast<long>(g * 7));
  }
  return out;
}

ComplexityStats ComplexityStats::from_array(std::span<const double> values) {
  if (values.size() != kSize) throw InvalidInput("complexity stats need 42 values, got " + std::to_string(values.size()));
  ComplexityStats cs;
  for (std::size_t g = 0; g < cs.groups.size(); ++g) {
    const double* v = values.data() + g * 7;
    cs.groups[g] = {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
    cs.valid[g] = true;
  }
  return cs;
}

ComplexityStats aggregate(std::span<const FrameComplexity> per_frame, const std::vector<bool>& iframe_flags) {
  if (per_frame.empty()) throw InvalidInput("aggregate: no frames");
  if (per_frame.size() != iframe_flags.size()) {
    throw InvalidInput("aggregate: " + std::to_string(per_frame.size()) + " frames but " +
                       std::to_string(iframe_flags.size()) + " I-frame flags");
  }
  if (std::none_of(iframe_flags.begin(), iframe_flags.end(), [](bool b) { return b; })) {
    throw InvalidInput("aggregate: no I-frame flagged");
  }

  std::array<std::vector<double>, 6> buckets;
  for (std::size_t i = 0; i < per_frame.size(); ++i) {
    const std::size_t p = iframe_flags[i] ? 0 : 1;
    const auto& f = per_frame[i];
    buckets[static_cast<std::size_t>(Metric::kSc) * 2 + p].push_back(f.sc);
    if (f.tc) buckets[static_cast<std::size_t>(Metric::kTc) * 2 + p].push_back(*f.tc);
    buckets[static_cast<std::size_t>(Metric::kBrightness) * 2 + p].push_back(f.brightness);
  }
  ComplexityStats cs;
  for (std::size_t g = 0; g < buckets.size(); ++g) {
    cs.groups[g] = stats::summarize(buckets[g]);
    cs.valid[g] = !buckets[g].empty();
  }
  return cs;
}

}  // namespace litevp
