#include "litevp/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "litevp/error.hpp"

namespace litevp {

using nlohmann::json;

namespace {

template <std::size_t N>
using Hist = std::array<double, N>;

// Raw counts of one frame record or of the whole clip.
struct Counts {
  Hist<22> block_sizes{};
  Hist<16> tx_types{};
  Hist<19> tx_sizes{};
  double skip = 0, intrabc = 0, palette = 0;
  Hist<8> ref_frames{};
  Hist<5> loop_filter{};
  Hist<4> mv_joints{};
  double mv_bits = 0, total_bits = 0;

  void add(const Counts& o) {
    auto acc = [](auto& a, const auto& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    acc(block_sizes, o.block_sizes);
    acc(tx_types, o.tx_types);
    acc(tx_sizes, o.tx_sizes);
    acc(ref_frames, o.ref_frames);
    acc(loop_filter, o.loop_filter);
    acc(mv_joints, o.mv_joints);
    skip += o.skip;
    intrabc += o.intrabc;
    palette += o.palette;
    mv_bits += o.mv_bits;
    total_bits += o.total_bits;
  }
};

double read_count(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path + ": expected an integer count");
  if (v.is_number_unsigned()) return static_cast<double>(v.get<std::uint64_t>());
  const auto n = v.get<std::int64_t>();
  if (n < 0) throw InvalidInput(path + ": negative count " + std::to_string(n));
  return static_cast<double>(n);
}

template <std::size_t N>
Hist<N> read_hist(const json& obj, const std::array<std::string_view, N>& names, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object of counts");
  Hist<N> h{};
  for (const auto& [key, value] : obj.items()) {
    const auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) throw ParseError(path + "." + key + ": unknown category");
    h[static_cast<std::size_t>(it - names.begin())] = read_count(value, path + "." + key);
  }
  return h;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(path + "." + key + ": unknown key");
    }
  }
}

Counts read_counts(const json& obj, const std::string& path, bool require_blocks) {
  Counts c;
  if (obj.contains("block_sizes")) {
    c.block_sizes = read_hist(obj["block_sizes"], kBlockSizes, path + ".block_sizes");
  } else if (require_blocks) {
    throw ParseError(path + ".block_sizes: required");
  }
  if (obj.contains("tx_types")) c.tx_types = read_hist(obj["tx_types"], kTxTypes, path + ".tx_types");
  if (obj.contains("tx_sizes")) c.tx_sizes = read_hist(obj["tx_sizes"], kTxSizes, path + ".tx_sizes");
  if (obj.contains("ref_frames")) c.ref_frames = read_hist(obj["ref_frames"], kRefFrames, path + ".ref_frames");
  if (obj.contains("loop_filter")) c.loop_filter = read_hist(obj["loop_filter"], kLoopFilters, path + ".loop_filter");
  if (obj.contains("mv_joints")) c.mv_joints = read_hist(obj["mv_joints"], kMvJoints, path + ".mv_joints");
  for (auto [key, dst] : {std::pair<const char*, double*>{"skip", &c.skip},
                          {"intrabc", &c.intrabc},
                          {"palette", &c.palette},
                          {"mv_bits", &c.mv_bits},
                          {"total_bits", &c.total_bits}}) {
    if (obj.contains(key)) *dst = read_count(obj[key], path + "." + key);
  }

  const double blocks = std::accumulate(c.block_sizes.begin(), c.block_sizes.end(), 0.0);
  for (auto [key, v] : {std::pair<const char*, double>{"skip", c.skip}, {"intrabc", c.intrabc}, {"palette", c.palette}}) {
    if (v > blocks) throw InvalidInput(path + "." + key + ": exceeds the block count");
  }
  if (c.mv_bits > c.total_bits) throw InvalidInput(path + ".mv_bits: exceeds total_bits");
  return c;
}

// Writes h / sum(h) to dst; all-zero histograms are recorded as missing.
template <std::size_t N>
void put_fractions(const Hist<N>& h, double* dst, std::vector<std::string>& missing, const std::string& path) {
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  if (sum <= 0) {
    std::fill(dst, dst + N, 0.0);
    missing.push_back(path);
    return;
  }
  for (std::size_t i = 0; i < N; ++i) dst[i] = h[i] / sum;
}

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

int log2_area(std::string_view size) {
  const auto x = size.find('x');
  const int w = std::stoi(std::string(size.substr(0, x)));
  const int h = std::stoi(std::string(size.substr(x + 1)));
  return static_cast<int>(std::lround(std::log2(static_cast<double>(w) * h)));
}

void fill_frame(const Counts& c, bool key, double bit_share, double* rec, std::vector<std::string>& missing,
                const std::string& path) {
  using namespace layout;
  const double blocks = std::accumulate(c.block_sizes.begin(), c.block_sizes.end(), 0.0);
  put_fractions(c.block_sizes, rec + kFrameBlockSizes, missing, path + ".block_sizes");
  put_fractions(c.tx_types, rec + kFrameTxTypes, missing, path + ".tx_types");
  put_fractions(c.tx_sizes, rec + kFrameTxSizes, missing, path + ".tx_sizes");
  rec[kFrameSkip] = ratio(c.skip, blocks);
  rec[kFrameIntrabc] = ratio(c.intrabc, blocks);
  rec[kFramePalette] = ratio(c.palette, blocks);
  put_fractions(c.ref_frames, rec + kFrameRefFrames, missing, path + ".ref_frames");
  put_fractions(c.loop_filter, rec + kFrameLoopFilter, missing, path + ".loop_filter");
  put_fractions(c.mv_joints, rec + kFrameMvJoints, missing, path + ".mv_joints");
  rec[kFrameMvBits] = ratio(c.mv_bits, c.total_bits);
  rec[kFrameIsKey] = key ? 1.0 : 0.0;
  rec[kFrameBitShare] = bit_share;
}

void fill_video(const Counts& c, double frames, double key_frames, double* rec, std::vector<std::string>& missing) {
  using namespace layout;
  const double blocks = std::accumulate(c.block_sizes.begin(), c.block_sizes.end(), 0.0);
  Hist<11> area{};
  for (std::size_t i = 0; i < kBlockSizes.size(); ++i) area[log2_area(kBlockSizes[i]) - 4] += c.block_sizes[i];
  Hist<9> tx_area{};
  for (std::size_t i = 0; i < kTxSizes.size(); ++i) tx_area[log2_area(kTxSizes[i]) - 4] += c.tx_sizes[i];

  put_fractions(area, rec + kVideoBlockArea, missing, "$.video.block_sizes");
  put_fractions(c.tx_types, rec + kVideoTxTypes, missing, "$.video.tx_types");
  put_fractions(tx_area, rec + kVideoTxArea, missing, "$.video.tx_sizes");
  rec[kVideoSkip] = ratio(c.skip, blocks);
  rec[kVideoIntrabc] = ratio(c.intrabc, blocks);
  rec[kVideoPalette] = ratio(c.palette, blocks);
  put_fractions(c.ref_frames, rec + kVideoRefFrames, missing, "$.video.ref_frames");
  rec[kVideoMvBits] = ratio(c.mv_bits, c.total_bits);
  rec[kVideoKeyFrames] = ratio(key_frames, frames);
  const double lf = std::accumulate(c.loop_filter.begin(), c.loop_filter.end(), 0.0);
  rec[kVideoFiltered] = lf > 0 ? 1.0 - c.loop_filter[0] / lf : 0.0;
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(path + ": not finite");
  return d;
}

StreamMeta read_meta(const json& doc, const VideoMeta* fallback) {
  static const json empty = json::object();
  const json& m = doc.contains("meta") ? doc["meta"] : empty;
  check_keys(m, {"duration_s", "bit_depth", "avg_coded_q_index", "width", "height", "fps"}, "$.meta");

  auto field = [&](const char* key, std::optional<double> from_y4m) {
    const std::string path = std::string("$.meta.") + key;
    if (m.contains(key)) return read_number(m[key], path);
    if (from_y4m) return *from_y4m;
    throw ParseError(path + ": required (no Y4M to fall back on)");
  };
  auto fb = [&](auto get) -> std::optional<double> {
    if (!fallback) return std::nullopt;
    return get(*fallback);
  };

  StreamMeta out;
  out.duration_s = field("duration_s", fb([](const VideoMeta& v) { return v.duration_s; }));
  const double depth = field("bit_depth", fb([](const VideoMeta& v) { return double(v.bit_depth); }));
  if (depth != 8 && depth != 10) throw ParseError("$.meta.bit_depth: must be 8 or 10");
  out.bit_depth_norm = depth == 10 ? 1.0 : 0.0;
  out.avg_coded_q_index = field("avg_coded_q_index", std::nullopt);
  out.width = field("width", fb([](const VideoMeta& v) { return double(v.width); }));
  out.height = field("height", fb([](const VideoMeta& v) { return double(v.height); }));
  out.fps = field("fps", fb([](const VideoMeta& v) { return v.fps(); }));

  if (out.avg_coded_q_index < 0 || out.avg_coded_q_index > 255) {
    throw InvalidInput("$.meta.avg_coded_q_index: outside [0, 255]");
  }
  if (out.duration_s < 0) throw InvalidInput("$.meta.duration_s: negative");
  if (out.width <= 0 || out.height <= 0) throw InvalidInput("$.meta: width and height must be positive");
  if (out.fps <= 0) throw InvalidInput("$.meta.fps: must be positive");
  return out;
}

json meta_to_json(const StreamMeta& m) {
  return {{"duration_s", m.duration_s}, {"bit_depth_norm", m.bit_depth_norm},
          {"avg_coded_q_index", m.avg_coded_q_index}, {"width", m.width},
          {"height", m.height}, {"fps", m.fps}};
}

}  // namespace

char group_letter(Group g) { return "FVMAC"[static_cast<std::size_t>(g)]; }

bool GroupMask::all() const { return std::all_of(keep.begin(), keep.end(), [](bool b) { return b; }); }

GroupMask GroupMask::parse(std::string_view text) {
  GroupMask m;
  if (text == "all" || text == "full") return m;
  // "-CA": every group except the listed ones.
  const bool removing = !text.empty() && text.front() == '-';
  if (removing) {
    text.remove_prefix(1);
    if (text.empty()) throw InvalidInput("feature mask: nothing after '-'");
  }
  m.keep.fill(removing);
  if (text == "none" && !removing) return m;
  if (text == "none") return m;
  if (text.empty()) throw InvalidInput("empty feature mask");
  for (char ch : text) {
    bool found = false;
    for (Group g : kAllGroups) {
      if (group_letter(g) == ch) {
        if (m.keep[static_cast<std::size_t>(g)] != removing)
          throw InvalidInput(std::string("feature mask repeats '") + ch + "'");
        m.keep[static_cast<std::size_t>(g)] = !removing;
        found = true;
      }
    }
    if (!found) throw InvalidInput(std::string("feature mask: unknown group '") + ch + "' (use F V M A C)");
  }
  return m;
}

std::string GroupMask::to_string() const {
  if (all()) return "all";
  std::string s;
  for (Group g : kAllGroups)
    if (enabled(g)) s += group_letter(g);
  return s.empty() ? "none" : s;
}

ParsedBitstream parse_bitstream_json(const json& doc, const VideoMeta* fallback) {
  check_keys(doc, {"version", "meta", "frames", "video"}, "$");
  if (doc.contains("version") && doc["version"] != 1) throw ParseError("$.version: unsupported (expected 1)");
  if (!doc.contains("frames")) throw ParseError("$.frames: required");
  const json& frames = doc["frames"];
  if (!frames.is_array()) throw ParseError("$.frames: expected an array");
  if (frames.empty()) throw ParseError("$.frames: empty");

  ParsedBitstream out;
  BitstreamStats& bs = out.stats;
  std::vector<Counts> per_frame;
  per_frame.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string path = "$.frames[" + std::to_string(i) + "]";
    const json& f = frames[i];
    check_keys(f,
               {"frame_type", "block_sizes", "tx_types", "tx_sizes", "skip", "intrabc", "palette", "ref_frames",
                "loop_filter", "mv_joints", "mv_bits", "total_bits"},
               path);
    if (!f.contains("frame_type") || !f["frame_type"].is_string()) {
      throw ParseError(path + ".frame_type: required string");
    }
    const auto type = f["frame_type"].get<std::string>();
    if (type != "KEY" && type != "INTER") throw ParseError(path + ".frame_type: expected KEY or INTER, got " + type);
    bs.key_frames.push_back(type == "KEY");
    per_frame.push_back(read_counts(f, path, true));
  }

  const std::size_t used = bs.frames_present();
  double bits_used = 0;
  for (std::size_t i = 0; i < used; ++i) bits_used += per_frame[i].total_bits;
  for (std::size_t i = 0; i < used; ++i) {
    fill_frame(per_frame[i], bs.key_frames[i], ratio(per_frame[i].total_bits, bits_used),
               bs.frame_level.data() + i * layout::kPerFrame, bs.missing, "$.frames[" + std::to_string(i) + "]");
  }
  for (std::size_t i = used; i < kFramesUsed; ++i) bs.missing.push_back("$.frames[" + std::to_string(i) + "]");

  double n_frames = static_cast<double>(frames.size());
  double n_key = static_cast<double>(std::count(bs.key_frames.begin(), bs.key_frames.end(), true));
  Counts clip;
  if (doc.contains("video")) {
    const json& v = doc["video"];
    check_keys(v,
               {"block_sizes", "tx_types", "tx_sizes", "skip", "intrabc", "palette", "ref_frames", "loop_filter",
                "mv_joints", "mv_bits", "total_bits", "frames", "key_frames"},
               "$.video");
    clip = read_counts(v, "$.video", false);
    if (v.contains("frames")) n_frames = read_count(v["frames"], "$.video.frames");
    if (v.contains("key_frames")) n_key = read_count(v["key_frames"], "$.video.key_frames");
    if (n_key > n_frames) throw InvalidInput("$.video.key_frames: exceeds frames");
  } else {
    for (const auto& c : per_frame) clip.add(c);
  }
  fill_video(clip, n_frames, n_key, bs.video_level.data(), bs.missing);

  out.meta = read_meta(doc, fallback);
  return out;
}

Scaler::Scaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw InvalidInput("scaler: min/max length differ");
  for (std::size_t i = 0; i < min_.size(); ++i) {
    if (!std::isfinite(min_[i]) || !std::isfinite(max_[i]) || max_[i] < min_[i]) {
      throw InvalidInput("scaler: bad range at dim " + std::to_string(i));
    }
  }
}

Scaler Scaler::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InvalidInput("scaler: empty training set");
  const std::size_t d = rows[0].size();
  std::vector<double> lo(d, 0.0), hi(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) lo[j] = hi[j] = rows[0][j];
  for (const auto& r : rows) {
    if (r.size() != d) throw InvalidInput("scaler: rows have different lengths");
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(r[j])) throw InvalidInput("scaler: non-finite value in column " + std::to_string(j));
      lo[j] = std::min(lo[j], r[j]);
      hi[j] = std::max(hi[j], r[j]);
    }
  }
  return Scaler(std::move(lo), std::move(hi));
}

double Scaler::scale(std::size_t dim, double v) const {
  const double range = max_.at(dim) - min_[dim];
  if (range <= 0) return 0.0;
  return std::clamp((v - min_[dim]) / range, kScaledLow, kScaledHigh);
}

json Scaler::to_json() const { return {{"min", min_}, {"max", max_}}; }

Scaler Scaler::from_json(const json& j) {
  try {
    return Scaler(j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("scaler: ") + e.what());
  }
}

std::vector<double> RawFeatures::scaler_row() const {
  std::vector<double> row = {meta.duration_s, meta.width, meta.height, meta.fps};
  const auto cs = complexity.to_array();
  row.insert(row.end(), cs.begin(), cs.end());
  return row;
}

json RawFeatures::to_json() const {
  json j;
  j["layout_version"] = layout_version;
  j["frame_level"] = bitstream.frame_level;
  j["video_level"] = bitstream.video_level;
  j["key_frames"] = bitstream.key_frames;
  j["missing"] = bitstream.missing;
  j["meta"] = meta_to_json(meta);
  j["complexity"] = complexity.to_array();
  j["complexity_groups_valid"] = complexity.valid;
  j["complexity_valid"] = complexity_valid;
  return j;
}

RawFeatures RawFeatures::from_json(const json& j) {
  RawFeatures r;
  try {
    r.layout_version = j.at("layout_version").get<int>();
    if (r.layout_version != kLayoutVersion) {
      throw VersionError("feature layout_version " + std::to_string(r.layout_version) + ", expected " +
                         std::to_string(kLayoutVersion));
    }
    const auto fl = j.at("frame_level").get<std::vector<double>>();
    const auto vl = j.at("video_level").get<std::vector<double>>();
    const auto cs = j.at("complexity").get<std::vector<double>>();
    if (fl.size() != r.bitstream.frame_level.size() || vl.size() != r.bitstream.video_level.size()) {
      throw ParseError("features: bitstream section has the wrong length");
    }
    std::copy(fl.begin(), fl.end(), r.bitstream.frame_level.begin());
    std::copy(vl.begin(), vl.end(), r.bitstream.video_level.begin());
    r.bitstream.key_frames = j.at("key_frames").get<std::vector<bool>>();
    r.bitstream.missing = j.at("missing").get<std::vector<std::string>>();
    r.complexity = ComplexityStats::from_array(cs);
    r.complexity.valid = j.at("complexity_groups_valid").get<std::array<bool, 6>>();
    r.complexity_valid = j.at("complexity_valid").get<bool>();
    const json& m = j.at("meta");
    r.meta.duration_s = m.at("duration_s").get<double>();
    r.meta.bit_depth_norm = m.at("bit_depth_norm").get<double>();
    r.meta.avg_coded_q_index = m.at("avg_coded_q_index").get<double>();
    r.meta.width = m.at("width").get<double>();
    r.meta.height = m.at("height").get<double>();
    r.meta.fps = m.at("fps").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("features: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("features: ") + e.what());
  }
  return r;
}

void apply_mask(std::span<double> values, const GroupMask& mask) {
  if (values.size() != kFeatureDim) throw InternalError("apply_mask: vector is not 754 long");
  for (Group g : kAllGroups) {
    if (mask.enabled(g)) continue;
    const auto s = group_span(g);
    std::fill_n(values.begin() + static_cast<long>(s.offset), s.size, 0.0);
  }
}

FeatureVector assemble(const BitstreamStats& bs, const StreamMeta& meta, const ComplexityStats& cs,
                       std::span<const double> clip_embed, const Scaler& scaler, const GroupMask& mask) {
  if (clip_embed.size() != group_span(Group::kClip).size) {
    throw InternalError("assemble: clip embedding has " + std::to_string(clip_embed.size()) + " values, layout wants 16");
  }
  if (scaler.dims() != kScaledDims) {
    throw InternalError("assemble: scaler has " + std::to_string(scaler.dims()) + " dims, layout wants 46");
  }

  FeatureVector fv;
  fv.mask = mask;
  auto& v = fv.values;
  std::copy(bs.frame_level.begin(), bs.frame_level.end(), v.begin() + group_span(Group::kFrame).offset);
  std::copy(bs.video_level.begin(), bs.video_level.end(), v.begin() + group_span(Group::kVideo).offset);

  double* m = v.data() + group_span(Group::kMeta).offset;
  m[layout::kMetaDuration] = scaler.scale(0, meta.duration_s);
  m[layout::kMetaBitDepth] = meta.bit_depth_norm;
  m[layout::kMetaAvgQ] = meta.avg_coded_q_index / 255.0;
  m[layout::kMetaWidth] = scaler.scale(1, meta.width);
  m[layout::kMetaHeight] = scaler.scale(2, meta.height);
  m[layout::kMetaFps] = scaler.scale(3, meta.fps);

  const auto stats = cs.to_array();
  double* a = v.data() + group_span(Group::kComplexity).offset;
  for (std::size_t i = 0; i < stats.size(); ++i) a[i] = scaler.scale(4 + i, stats[i]);

  std::copy(clip_embed.begin(), clip_embed.end(), v.begin() + group_span(Group::kClip).offset);

  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw NumericError("assemble: non-finite value at index " + std::to_string(i));
  }
  apply_mask(v, mask);
  return fv;
}

FeatureVector assemble(const RawFeatures& raw, std::span<const double> clip_embed, const Scaler& scaler,
                       const GroupMask& mask) {
  if (raw.layout_version != kLayoutVersion) throw InternalError("assemble: raw features use another layout");
  return assemble(raw.bitstream, raw.meta, raw.complexity, clip_embed, scaler, mask);
}

}  // namespace litevp
