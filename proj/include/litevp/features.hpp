#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "litevp/complexity.hpp"
#include "litevp/media_io.hpp"

namespace litevp {

// Category tables. The order of each table is the order of the matching
// histogram inside the feature vector, so never reorder without bumping
// kLayoutVersion.
inline constexpr std::array<std::string_view, 22> kBlockSizes = {
    "4x4",   "4x8",   "8x4",   "8x8",    "8x16",    "16x8",     "16x16", "16x32", "32x16", "32x32", "32x64",
    "64x32", "64x64", "64x128", "128x64", "128x128", "4x16", "16x4",  "8x32",  "32x8",  "16x64", "64x16"};
inline constexpr std::array<std::string_view, 16> kTxTypes = {
    "DCT_DCT",      "ADST_DCT",          "DCT_ADST",      "ADST_ADST", "FLIPADST_DCT", "DCT_FLIPADST",
    "FLIPADST_FLIPADST", "ADST_FLIPADST", "FLIPADST_ADST", "IDTX",      "V_DCT",        "H_DCT",
    "V_ADST",       "H_ADST",            "V_FLIPADST",    "H_FLIPADST"};
inline constexpr std::array<std::string_view, 19> kTxSizes = {
    "4x4",   "8x8",   "16x16", "32x32", "64x64", "4x8",  "8x4",  "8x16",  "16x8", "16x32",
    "32x16", "32x64", "64x32", "4x16",  "16x4",  "8x32", "32x8", "16x64", "64x16"};
inline constexpr std::array<std::string_view, 8> kRefFrames = {"INTRA",  "LAST",   "LAST2",   "LAST3",
                                                                "GOLDEN", "BWDREF", "ALTREF2", "ALTREF"};
inline constexpr std::array<std::string_view, 5> kLoopFilters = {"none", "deblock", "cdef", "restoration",
                                                                  "superres"};
inline constexpr std::array<std::string_view, 4> kMvJoints = {"zero", "hnzvz", "hzvnz", "hnzvnz"};

// Layout version 1. See docs/feature_layout.md for the full offset table.
inline constexpr int kLayoutVersion = 1;
inline constexpr std::size_t kFeatureDim = 754;
inline constexpr std::size_t kFramesUsed = 8;

namespace layout {

// Offsets inside one per-frame record.
inline constexpr std::size_t kFrameBlockSizes = 0;
inline constexpr std::size_t kFrameTxTypes = 22;
inline constexpr std::size_t kFrameTxSizes = 38;
inline constexpr std::size_t kFrameSkip = 57;
inline constexpr std::size_t kFrameIntrabc = 58;
inline constexpr std::size_t kFramePalette = 59;
inline constexpr std::size_t kFrameRefFrames = 60;
inline constexpr std::size_t kFrameLoopFilter = 68;
inline constexpr std::size_t kFrameMvJoints = 73;
inline constexpr std::size_t kFrameMvBits = 77;
inline constexpr std::size_t kFrameIsKey = 78;
inline constexpr std::size_t kFrameBitShare = 79;
inline constexpr std::size_t kPerFrame = 80;

// Offsets inside the video-level record.
inline constexpr std::size_t kVideoBlockArea = 0;  // log2(area) 4..14
inline constexpr std::size_t kVideoTxTypes = 11;
inline constexpr std::size_t kVideoTxArea = 27;  // log2(area) 4..12
inline constexpr std::size_t kVideoSkip = 36;
inline constexpr std::size_t kVideoIntrabc = 37;
inline constexpr std::size_t kVideoPalette = 38;
inline constexpr std::size_t kVideoRefFrames = 39;
inline constexpr std::size_t kVideoMvBits = 47;
inline constexpr std::size_t kVideoKeyFrames = 48;
inline constexpr std::size_t kVideoFiltered = 49;
inline constexpr std::size_t kPerVideo = 50;

// Meta record order.
inline constexpr std::size_t kMetaDuration = 0;
inline constexpr std::size_t kMetaBitDepth = 1;
inline constexpr std::size_t kMetaAvgQ = 2;
inline constexpr std::size_t kMetaWidth = 3;
inline constexpr std::size_t kMetaHeight = 4;
inline constexpr std::size_t kMetaFps = 5;

}  // namespace layout

enum class Group { kFrame = 0, kVideo = 1, kMeta = 2, kComplexity = 3, kClip = 4 };
inline constexpr std::array<Group, 5> kAllGroups = {Group::kFrame, Group::kVideo, Group::kMeta, Group::kComplexity,
                                                    Group::kClip};

struct GroupSpan {
  std::size_t offset;
  std::size_t size;
};

constexpr GroupSpan group_span(Group g) {
  switch (g) {
    case Group::kFrame: return {0, 640};
    case Group::kVideo: return {640, 50};
    case Group::kMeta: return {690, 6};
    case Group::kComplexity: return {696, 42};
    case Group::kClip: return {738, 16};
  }
  return {0, 0};
}

/// Letter used for a group in mask strings: F, V, M, A, C.
char group_letter(Group g);

/// Which feature groups are kept. Dropped groups are zeroed, never removed.
struct GroupMask {
  std::array<bool, 5> keep{true, true, true, true, true};

  bool enabled(Group g) const { return keep[static_cast<std::size_t>(g)]; }
  bool all() const;

  /// "all" (or "full"), "none", the letters of the kept groups ("FVMA"), or
  /// "-" and the letters of the removed groups ("-C" = "FVMA").
  static GroupMask parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const GroupMask&) const = default;
};

struct BitstreamStats {
  std::array<double, kFramesUsed * layout::kPerFrame> frame_level{};
  std::array<double, layout::kPerVideo> video_level{};
  /// One entry per record in "frames", true for KEY frames.
  std::vector<bool> key_frames;
  /// JSON paths of optional sections that were absent or all-zero.
  std::vector<std::string> missing;

  std::size_t frames_present() const { return std::min(key_frames.size(), kFramesUsed); }
};

struct StreamMeta {
  double duration_s = 0.0;
  double bit_depth_norm = 0.0;
  double avg_coded_q_index = 0.0;
  double width = 0.0;
  double height = 0.0;
  double fps = 0.0;

  std::array<double, 6> to_array() const {
    return {duration_s, bit_depth_norm, avg_coded_q_index, width, height, fps};
  }
};

struct ParsedBitstream {
  BitstreamStats stats;
  StreamMeta meta;
};

/// Converts the per-clip bitstream JSON (format in docs/bitstream_json.md)
/// into fractions. Meta fields absent from the document are taken from
/// `fallback` when given. Schema violations raise ParseError naming the JSON
/// path; negative counts raise InvalidInput.
ParsedBitstream parse_bitstream_json(const nlohmann::json& doc, const VideoMeta* fallback = nullptr);

/// Number of scaled dimensions: duration, width, height, fps, then the 42
/// complexity statistics.
inline constexpr std::size_t kScaledDims = 46;

/// Per-dimension min-max scaler. Immutable once fitted.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> min, std::vector<double> max);

  /// Throws InvalidInput on an empty set or ragged rows.
  static Scaler fit(std::span<const std::vector<double>> rows);

  std::size_t dims() const { return min_.size(); }
  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

  /// (v - min) / (max - min), 0 for a constant column, clamped to [-0.5, 1.5].
  double scale(std::size_t dim, double v) const;

  nlohmann::json to_json() const;
  static Scaler from_json(const nlohmann::json& j);

 private:
  std::vector<double> min_, max_;
};

inline constexpr double kScaledLow = -0.5;
inline constexpr double kScaledHigh = 1.5;

/// Everything extract persists per video before scaling.
struct RawFeatures {
  int layout_version = kLayoutVersion;
  BitstreamStats bitstream;
  StreamMeta meta;
  ComplexityStats complexity;
  bool complexity_valid = false;

  /// The kScaledDims values fed to the scaler.
  std::vector<double> scaler_row() const;

  nlohmann::json to_json() const;
  /// Throws VersionError for a different layout_version.
  static RawFeatures from_json(const nlohmann::json& j);
};

struct FeatureVector {
  int layout_version = kLayoutVersion;
  std::array<double, kFeatureDim> values{};
  GroupMask mask;

  std::span<const double> section(Group g) const {
    const auto s = group_span(g);
    return std::span<const double>(values).subspan(s.offset, s.size);
  }
};

/// Concatenates the groups in layout order. Throws InternalError when the
/// embedding or scaler do not match the layout.
FeatureVector assemble(const BitstreamStats& bs, const StreamMeta& meta, const ComplexityStats& cs,
                       std::span<const double> clip_embed, const Scaler& scaler, const GroupMask& mask);
FeatureVector assemble(const RawFeatures& raw, std::span<const double> clip_embed, const Scaler& scaler,
                       const GroupMask& mask);

/// Zeroes the masked groups of an already assembled vector in place.
void apply_mask(std::span<double> values, const GroupMask& mask);

}  // namespace litevp
