#include "litevp/synth.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "litevp/embedding_file.hpp"
#include "litevp/error.hpp"
#include "litevp/features.hpp"
#include "litevp/media_io.hpp"
#include "litevp/parallel.hpp"
#include "litevp/rng.hpp"

namespace litevp {

using nlohmann::json;
namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
  if (n_videos < 2) throw InvalidInput("synth: n_videos must be >= 2");
  if (!(c_min < c_max) || c_min < 0 || c_max > 255) throw InvalidInput("synth: need 0 <= c_min < c_max <= 255");
  if (!(s_min > 0 && s_min < s_max)) throw InvalidInput("synth: need 0 < s_min < s_max");
  if (c_noise < 0 || s_noise < 0 || feature_noise < 0) throw InvalidInput("synth: noise parameters must be >= 0");
  if (!(test_fraction > 0 && test_fraction < 1)) throw InvalidInput("synth: test_fraction must be in (0, 1)");
  if (width < 8 || height < 8 || width % 2 || height % 2) throw InvalidInput("synth: width/height must be even and >= 8");
  if (frames < 2) throw InvalidInput("synth: frames must be >= 2");
}

json SyntheticSpec::to_json() const {
  return {{"n_videos", n_videos}, {"seed", seed},         {"c_min", c_min},
          {"c_max", c_max},       {"s_min", s_min},       {"s_max", s_max},
          {"c_noise", c_noise},   {"s_noise", s_noise},   {"feature_noise", feature_noise},
          {"test_fraction", test_fraction}, {"width", width}, {"height", height},
          {"frames", frames}};
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidInput("synth: " + key + ": not a number: " + v);
  return out;
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidInput("synth: " + key + ": not an integer: " + v);
  return out;
}

}  // namespace

void SyntheticSpec::set(const std::string& key, const std::string& value) {
  if (key == "n_videos") n_videos = parse_int<int>(key, value);
  else if (key == "seed") seed = parse_int<std::uint64_t>(key, value);
  else if (key == "c_min") c_min = parse_double(key, value);
  else if (key == "c_max") c_max = parse_double(key, value);
  else if (key == "s_min") s_min = parse_double(key, value);
  else if (key == "s_max") s_max = parse_double(key, value);
  else if (key == "c_noise") c_noise = parse_double(key, value);
  else if (key == "s_noise") s_noise = parse_double(key, value);
  else if (key == "feature_noise") feature_noise = parse_double(key, value);
  else if (key == "test_fraction") test_fraction = parse_double(key, value);
  else if (key == "width") width = parse_int<int>(key, value);
  else if (key == "height") height = parse_int<int>(key, value);
  else if (key == "frames") frames = parse_int<int>(key, value);
  else throw InvalidInput("synth: unknown key " + key);
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string video_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "syn%05d", index);
  return buf;
}

// log2 of the block area for "WxH".
double log2_area(std::string_view name) {
  const auto x = name.find('x');
  int w = 0, h = 0;
  std::from_chars(name.data(), name.data() + x, w);
  std::from_chars(name.data() + x + 1, name.data() + name.size(), h);
  return std::log2(double(w) * h);
}

// Splits `total` over the names with weights w_i * lognormal noise.
template <std::size_t N>
json histogram(Rng& rng, const std::array<std::string_view, N>& names, const std::array<double, N>& weights,
               double total, double noise) {
  std::array<double, N> w{};
  double sum = 0;
  for (std::size_t i = 0; i < N; ++i) sum += (w[i] = weights[i] * std::exp(rng.normal(0.0, noise)));
  json h = json::object();
  for (std::size_t i = 0; i < N; ++i) {
    const auto c = static_cast<long>(std::lround(total * w[i] / sum));
    if (c > 0) h[std::string(names[i])] = c;
  }
  return h;
}

template <std::size_t N>
std::array<double, N> size_weights(const std::array<std::string_view, N>& names, double lambda) {
  std::array<double, N> w{};
  for (std::size_t i = 0; i < N; ++i) w[i] = std::exp(-lambda * (log2_area(names[i]) - 8.0));
  return w;
}

json bitstream_doc(Rng& rng, const SyntheticTruth& t, const std::vector<bool>& keys, double fn) {
  static constexpr std::array<std::pair<int, int>, 4> kResolutions = {
      std::pair{1280, 720}, {1920, 1080}, {2560, 1440}, {3840, 2160}};
  static constexpr std::array<double, 5> kFps = {24, 25, 30, 50, 60};
  const auto res = kResolutions[rng.below(kResolutions.size())];
  json meta = {{"duration_s", std::round(rng.uniform(3, 20) * 100) / 100},
               {"bit_depth", rng.bernoulli(0.5) ? 10 : 8},
               {"avg_coded_q_index", std::round(rng.uniform(40, 200) * 10) / 10},
               {"width", res.first},
               {"height", res.second},
               {"fps", kFps[rng.below(kFps.size())]}};

  // Small blocks and small transforms for textured content.
  const double lambda = 1.6 * (t.texture - 0.5) + 0.1 * fn * rng.normal();
  const auto block_w = size_weights(kBlockSizes, lambda);
  const auto tx_size_w = size_weights(kTxSizes, 0.8 * lambda);
  std::array<double, kTxTypes.size()> tx_type_w{};
  tx_type_w.fill(0.04);
  tx_type_w[0] = 1.0;                    // DCT_DCT
  tx_type_w[3] = 0.15;                   // ADST_ADST
  tx_type_w[9] = 0.05 + 0.5 * t.texture;  // IDTX

  json frames = json::array();
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const bool key = keys[k];
    const double blocks = std::round(400 + 600 * rng.uniform());
    json f;
    f["frame_type"] = key ? "KEY" : "INTER";
    f["block_sizes"] = histogram(rng, kBlockSizes, block_w, blocks, 0.3 * fn);
    f["tx_types"] = histogram(rng, kTxTypes, tx_type_w, blocks, 0.3 * fn);
    f["tx_sizes"] = histogram(rng, kTxSizes, tx_size_w, blocks, 0.3 * fn);
    const double skip = key ? 0.02 * rng.uniform() : clamp01(0.85 - 0.6 * t.motion + 0.05 * fn * rng.normal());
    f["skip"] = std::lround(blocks * skip);
    f["intrabc"] = key ? std::lround(blocks * 0.02 * rng.uniform()) : 0;
    f["palette"] = std::lround(blocks * 0.03 * rng.uniform());
    if (key) {
      f["ref_frames"] = {{"INTRA", static_cast<long>(blocks)}};
    } else {
      std::array<double, kRefFrames.size()> ref_w{};
      ref_w.fill(0.02);
      ref_w[0] = 0.05 + 0.3 * t.motion;  // INTRA
      ref_w[1] = 0.6;                    // LAST
      ref_w[4] = 0.2;                    // GOLDEN
      ref_w[7] = 0.1;                    // ALTREF
      f["ref_frames"] = histogram(rng, kRefFrames, ref_w, blocks, 0.3 * fn);
      const double moving = 0.2 + 0.8 * t.motion;
      f["mv_joints"] = histogram(rng, kMvJoints, std::array<double, 4>{1 - moving, moving * 0.3, moving * 0.2, moving * 0.5},
                                 blocks, 0.2 * fn);
    }
    f["loop_filter"] = histogram(rng, kLoopFilters, std::array<double, 5>{0.2, 0.5, 0.3, 0.05, 0.01}, blocks, 0.3 * fn);
    const double bits =
        2e5 * (0.4 + t.texture) * (key ? 3.0 : 0.3 + t.motion) * std::exp(0.15 * fn * rng.normal());
    f["total_bits"] = std::lround(bits);
    f["mv_bits"] = key ? 0 : std::lround(bits * (0.05 + 0.3 * t.motion));
    frames.push_back(std::move(f));
  }
  return {{"version", 1}, {"meta", std::move(meta)}, {"frames", std::move(frames)}};
}

std::vector<Frame> luma_frames(Rng& rng, const SyntheticSpec& spec, const SyntheticTruth& t) {
  const int W = spec.width, H = spec.height;
  const double level = 50 + 150 * rng.uniform();  // brightness is a nuisance
  const double amp = 6 + 40 * t.texture;
  const double speed = 3.0 * t.motion;
  const double dir = rng.uniform(0, 2 * std::numbers::pi);
  const double vx = speed * std::cos(dir), vy = speed * std::sin(dir);
  struct Wave {
    double fx, fy, phase, weight;
  };
  std::array<Wave, 4> waves{};
  const double fmax = 0.03 + 0.2 * t.texture;
  for (auto& w : waves) {
    const double f = rng.uniform(0.01, fmax), a = rng.uniform(0, 2 * std::numbers::pi);
    w = {f * std::cos(a), f * std::sin(a), rng.uniform(0, 2 * std::numbers::pi), rng.uniform(0.5, 1.0)};
  }
  std::vector<double> grain(static_cast<std::size_t>(W) * H);
  for (auto& g : grain) g = rng.normal(0.0, 1 + 6 * t.texture);
  const double flicker = 0.5 + 3 * t.motion;

  std::vector<Frame> frames;
  for (int k = 0; k < spec.frames; ++k) {
    Frame f(W, H, 8);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const double px = x + k * vx, py = y + k * vy;
        double v = 0;
        for (const auto& w : waves) v += w.weight * std::sin(2 * std::numbers::pi * (w.fx * px + w.fy * py) + w.phase);
        // Grain moves with the content (nearest source pixel, wrapped).
        const int gx = ((static_cast<int>(std::floor(px)) % W) + W) % W;
        const int gy = ((static_cast<int>(std::floor(py)) % H) + H) % H;
        v = level + amp * v + grain[static_cast<std::size_t>(gy) * W + gx] + rng.normal(0.0, flicker);
        f.at(x, y) = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    frames.push_back(std::move(f));
  }
  return frames;
}

struct Directions {
  std::vector<double> semantic, texture;
};

Directions embedding_directions(std::uint64_t seed) {
  Rng rng(seed ^ 0xC11Bull);
  auto unit = [&] {
    std::vector<double> d(kClipDim);
    double n = 0;
    for (auto& v : d) {
      v = rng.normal();
      n += v * v;
    }
    for (auto& v : d) v /= std::sqrt(n);
    return d;
  };
  Directions d;
  d.semantic = unit();
  d.texture = unit();
  return d;
}

// Frame embeddings: a per-video content vector, per-frame jitter and the
// latent directions. Unit-variance scale like standardised CLIP features.
ClipEmbedding embedding(Rng& rng, const SyntheticTruth& t, const Directions& dirs, double fn) {
  std::vector<double> content(kClipDim);
  for (auto& v : content) v = rng.normal(0.0, 0.6 * fn);
  ClipEmbedding e;
  for (int f = 0; f < kClipFrames; ++f)
    for (int d = 0; d < kClipDim; ++d) {
      const double v = content[d] + rng.normal(0.0, 0.3 * fn) + 8.0 * (t.semantic - 0.5) * dirs.semantic[d] +
                       4.0 * (t.texture - 0.5) * dirs.texture[d];
      e.values[static_cast<std::size_t>(f) * kClipDim + d] = static_cast<float>(v);
    }
  return e;
}

std::vector<RdSample> rd_samples(Rng& rng, double c, double s) {
  // 24 QPs, an even spread with jitter; strictly increasing by construction.
  std::vector<RdSample> out;
  int prev = -1;
  for (int k = 0; k < 24; ++k) {
    const double centre = k * 255.0 / 23.0;
    int qp = static_cast<int>(std::lround(centre + rng.uniform(-4, 4)));
    qp = std::clamp(qp, prev + 1, 255 - (23 - k));
    out.push_back({qp, 100.0 / (1.0 + std::exp((qp - c) / s))});
    prev = qp;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

SyntheticVideo synth_video(const SyntheticSpec& spec, int index, const fs::path& root) {
  Rng rng(spec.seed * kGolden + static_cast<std::uint64_t>(index) + 1);
  SyntheticVideo v;
  auto& t = v.truth;
  t.id = video_id(index);
  t.texture = rng.uniform();
  t.motion = rng.uniform();
  t.semantic = rng.uniform();

  const double zc = 0.40 * t.texture + 0.25 * t.motion + 0.20 * t.semantic + 0.15 * t.texture * t.motion;
  t.c = std::clamp(spec.c_max - (spec.c_max - spec.c_min) * zc + rng.normal(0.0, spec.c_noise * (spec.c_max - spec.c_min)),
                   spec.c_min, spec.c_max);
  const double zs = 0.5 * t.motion + 0.3 * (1 - t.texture) + 0.2 * t.semantic + rng.normal(0.0, spec.s_noise);
  // s >= c / 25 keeps every knot distinguishable from 100 in double precision.
  t.s = std::max(spec.s_min + (spec.s_max - spec.s_min) * clamp01(zs), t.c / 25.0);

  std::vector<bool> keys(static_cast<std::size_t>(spec.frames), false);
  keys[0] = true;
  if (spec.frames > 4 && rng.bernoulli(0.15)) keys[4] = true;

  const double fn = spec.feature_noise;
  const auto frames = luma_frames(rng, spec, t);
  const json bs = bitstream_doc(rng, t, keys, fn);
  const auto emb = embedding(rng, t, embedding_directions(spec.seed), fn);

  auto& e = v.entry;
  e.id = t.id;
  e.y4m_path = "videos/" + t.id + ".y4m";
  e.bitstream_json_path = "bitstream/" + t.id + ".json";
  e.clip_embed_path = "clip/" + t.id + ".lvpe";
  e.rd_samples = rd_samples(rng, t.c, t.s);

  VideoMeta meta;
  meta.width = spec.width;
  meta.height = spec.height;
  meta.fps_num = 30;
  meta.fps_den = 1;
  meta.bit_depth = 8;
  meta.chroma = Chroma::k420;
  write_y4m(root / e.y4m_path, meta, frames);
  write_text(root / e.bitstream_json_path, bs.dump(1) + "\n");
  write_embedding(root / e.clip_embed_path, emb);
  return v;
}

Manifest synth_corpus(const SyntheticSpec& spec, const fs::path& root, unsigned jobs) {
  spec.validate();
  for (const char* sub : {"videos", "bitstream", "clip"}) fs::create_directories(root / sub);

  const auto n = static_cast<std::size_t>(spec.n_videos);
  std::vector<SyntheticVideo> videos(n);
  parallel_for(n, jobs, [&](std::size_t i) { videos[i] = synth_video(spec, static_cast<int>(i), root); });

  // Exact test share, chosen by a seeded permutation.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(spec.seed ^ 0x5B117ull);
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto n_test = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(spec.test_fraction * n)), 1, n - 1);
  for (std::size_t k = 0; k < n_test; ++k) videos[order[k]].entry.split = Split::kTest;

  Manifest m;
  m.base_dir = root;
  std::string truth;
  for (auto& v : videos) {
    m.entries.push_back(v.entry);
    const auto& t = v.truth;
    truth += json{{"id", t.id}, {"texture", t.texture}, {"motion", t.motion}, {"semantic", t.semantic},
                  {"c", t.c},   {"s", t.s}}
                 .dump() +
             "\n";
  }
  write_manifest(root / "manifest.jsonl", m);
  write_text(root / "truth.jsonl", truth);
  write_text(root / "synth_spec.json", spec.to_json().dump(2) + "\n");
  return m;
}

std::vector<SyntheticTruth> read_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<SyntheticTruth> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("texture").get<double>(), j.at("motion").get<double>(),
                     j.at("semantic").get<double>(), j.at("c").get<double>(), j.at("s").get<double>()});
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace litevp
