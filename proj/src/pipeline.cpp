#include "litevp/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

#include "litevp/complexity.hpp"
#include "litevp/embedding_file.hpp"
#include "litevp/error.hpp"
#include "litevp/media_io.hpp"
#include "litevp/parallel.hpp"

namespace litevp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot create " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

VideoComplexity video_complexity(Y4mVideo video, const std::vector<bool>& key_frames) {
  if (video.frames.empty()) throw InvalidInput("video has no frames");
  if (video.meta.width > kAnalysisWidth || video.meta.height > kAnalysisHeight) {
    for (auto& f : video.frames) f = lanczos5_resize(f, kAnalysisWidth, kAnalysisHeight);
  }
  VideoComplexity out;
  out.meta = video.meta;
  out.iframes.assign(video.frames.size(), false);
  out.iframes[0] = true;
  for (std::size_t i = 0; i < std::min(key_frames.size(), out.iframes.size()); ++i)
    out.iframes[i] = out.iframes[i] || key_frames[i];
  out.per_frame = analyze_frames(video.frames);
  out.stats = aggregate(out.per_frame, out.iframes);
  return out;
}

VideoComplexity video_complexity(const fs::path& y4m, const std::vector<bool>& key_frames) {
  if (!fs::exists(y4m)) throw IoError("missing video " + y4m.string());
  try {
    return video_complexity(read_y4m(y4m), key_frames);
  } catch (const InvalidInput& e) {
    throw InvalidInput(y4m.string() + ": " + e.what());
  }
}

RawFeatures extract_features(const Manifest& m, const ManifestEntry& e) {
  const fs::path y4m = m.resolve(e.y4m_path);
  const fs::path bs_path = m.resolve(e.bitstream_json_path);
  if (!fs::exists(y4m)) throw IoError("missing video " + y4m.string());
  if (!fs::exists(bs_path)) throw IoError("missing bitstream JSON " + bs_path.string());

  Y4mVideo video = read_y4m(y4m);
  if (video.frames.empty()) throw InvalidInput(y4m.string() + ": no frames");
  ParsedBitstream parsed;
  try {
    parsed = parse_bitstream_json(read_json_file(bs_path), &video.meta);
  } catch (const ParseError& err) {
    throw ParseError(bs_path.string() + ": " + err.what());
  } catch (const InvalidInput& err) {
    throw InvalidInput(bs_path.string() + ": " + err.what());
  }

  const VideoComplexity vc = video_complexity(std::move(video), parsed.stats.key_frames);
  RawFeatures raw;
  raw.bitstream = std::move(parsed.stats);
  raw.meta = parsed.meta;
  raw.complexity = vc.stats;
  raw.complexity_valid = true;
  return raw;
}

fs::path feature_path(const fs::path& dir, const std::string& id) { return dir / (id + ".features.json"); }

void write_feature_file(const fs::path& path, const std::string& id, const RawFeatures& raw) {
  json j = raw.to_json();
  j["id"] = id;
  write_atomic(path, j.dump(1) + "\n");
}

RawFeatures read_feature_file(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    return RawFeatures::from_json(j);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::size_t ExtractReport::count(ItemStatus s) const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [&](const auto& i) { return i.status == s; }));
}

ExtractReport extract_all(const Manifest& m, const fs::path& out_dir, bool force, unsigned jobs,
                          const std::function<void(const ExtractItem&)>& on_item) {
  fs::create_directories(out_dir);
  ExtractReport report;
  report.items.resize(m.entries.size());
  std::mutex log_mutex;
  parallel_for(m.entries.size(), jobs, [&](std::size_t i) {
    const auto& e = m.entries[i];
    ExtractItem& item = report.items[i];
    item.id = e.id;
    const fs::path out = feature_path(out_dir, e.id);
    if (!force && fs::exists(out)) {
      item.status = ItemStatus::kSkipped;
    } else {
      try {
        write_feature_file(out, e.id, extract_features(m, e));
        item.status = ItemStatus::kWritten;
      } catch (const std::exception& err) {
        item.status = ItemStatus::kFailed;
        item.message = err.what();
      }
    }
    if (on_item) {
      std::lock_guard lock(log_mutex);
      on_item(item);
    }
  });
  return report;
}

json fit_curve_json(const ManifestEntry& e) {
  const RdCurve curve = RdCurve::fit(e.rd_samples);
  const QualityTargets t = derive_targets(curve);
  json targets = json::array();
  for (std::size_t k = 0; k < kNumTargets; ++k)
    targets.push_back({{"vmaf", t.vmaf_targets[k]}, {"qp", t.derived_qps[k].qp}, {"reachable", t.derived_qps[k].reachable}});
  return {{"id", e.id},
          {"split", split_name(e.split)},
          {"knots", curve.knots_qp().size()},
          {"qp_range", {curve.min_qp(), curve.max_qp()}},
          {"vmaf_range", {curve.min_vmaf(), curve.max_vmaf()}},
          {"targets", std::move(targets)}};
}

TrainSample ground_truth(const ManifestEntry& e) {
  TrainSample s;
  s.id = e.id;
  s.curve = RdCurve::fit(e.rd_samples);
  const auto targets = derive_targets(s.curve);
  for (std::size_t k = 0; k < kNumTargets; ++k) s.target_qp[k] = targets.derived_qps[k].qp;
  return s;
}

std::vector<TrainSample> load_samples(const Manifest& m, Split split, const fs::path& features_dir,
                                      bool load_embeddings) {
  std::vector<TrainSample> out;
  for (const ManifestEntry* e : m.split(split)) {
    const fs::path fp = feature_path(features_dir, e->id);
    if (!fs::exists(fp)) throw IoError("missing feature file " + fp.string() + " (run extract)");
    TrainSample s = ground_truth(*e);
    s.raw = read_feature_file(fp);
    if (load_embeddings) {
      if (e->clip_embed_path.empty())
        throw InvalidInput(e->id + ": no clip_embed_path but the C group is enabled (mask it with -C)");
      const fs::path ep = m.resolve(e->clip_embed_path);
      if (!fs::exists(ep)) throw IoError("missing embedding " + ep.string());
      s.embedding = read_embedding(ep);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PredictionRow> predict_samples(const ModelCheckpoint& ckpt, std::span<const TrainSample> samples) {
  std::vector<const RawFeatures*> raws;
  std::vector<const ClipEmbedding*> embs;
  for (const auto& s : samples) {
    raws.push_back(&s.raw);
    embs.push_back(s.embedding ? &*s.embedding : nullptr);
  }
  const auto preds = predict(ckpt, raws, embs);
  std::vector<PredictionRow> rows;
  for (std::size_t i = 0; i < samples.size(); ++i) rows.push_back({samples[i].id, preds[i]});
  return rows;
}

void write_predictions(std::ostream& out, std::span<const PredictionRow> rows) {
  for (const auto& r : rows) {
    json j = {{"id", r.id}, {"qp", r.prediction.qp}, {"qp_norm", r.prediction.qp_norm},
              {"vmaf_targets", r.prediction.vmaf_targets}};
    out << j.dump() << '\n';
  }
}

void write_predictions(const fs::path& path, std::span<const PredictionRow> rows) {
  std::ostringstream s;
  write_predictions(s, rows);
  write_atomic(path, s.str());
}

std::map<std::string, std::array<double, kNumTargets>> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::array<double, kNumTargets>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(n);
    try {
      const json j = json::parse(line);
      const auto id = j.at("id").get<std::string>();
      const auto qp = j.at("qp").get<std::vector<double>>();
      if (qp.size() != kNumTargets) throw ParseError(where + ": qp needs " + std::to_string(kNumTargets) + " values");
      std::array<double, kNumTargets> a{};
      std::copy(qp.begin(), qp.end(), a.begin());
      if (!out.emplace(id, a).second) throw InvalidInput(where + ": duplicate id " + id);
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalRecord> join_records(std::span<const TrainSample> samples,
                                     const std::map<std::string, std::array<double, kNumTargets>>& qp_pred) {
  std::vector<EvalRecord> out;
  for (const auto& s : samples) {
    const auto it = qp_pred.find(s.id);
    if (it == qp_pred.end()) throw InvalidInput("no prediction for " + s.id);
    out.push_back(make_record(s.id, s.curve, it->second, s.target_qp));
  }
  return out;
}

std::array<double, kNumTargets> mean_qp(std::span<const TrainSample> train) {
  if (train.empty()) throw InvalidInput("mean_qp: no training samples");
  std::array<double, kNumTargets> m{};
  for (std::size_t k = 0; k < kNumTargets; ++k) {
    double s = 0;
    for (const auto& t : train) s += t.target_qp[k];
    m[k] = s / static_cast<double>(train.size());
  }
  return m;
}

std::vector<EvalRecord> constant_records(std::span<const TrainSample> test, const std::array<double, kNumTargets>& qp) {
  std::vector<EvalRecord> out;
  for (const auto& s : test) out.push_back(make_record(s.id, s.curve, qp, s.target_qp));
  return out;
}

std::vector<AblationRow> ablate(std::span<const TrainSample> train_set, std::span<const TrainSample> test,
                                std::span<const GroupMask> masks, const TrainConfig& cfg,
                                const std::function<void(const GroupMask&, const EpochLog&)>& on_epoch) {
  std::vector<AblationRow> rows;
  for (const GroupMask& mask : masks) {
    EpochCallback cb;
    if (on_epoch) cb = [&](const EpochLog& log) { on_epoch(mask, log); };
    AblationRow row;
    row.mask = mask;
    const ModelCheckpoint ckpt = train(train_set, cfg, mask, cb);
    row.history = ckpt.history;
    row.best_epoch = ckpt.best_epoch;
    std::map<std::string, std::array<double, kNumTargets>> pred;
    for (const auto& p : predict_samples(ckpt, test)) pred[p.id] = p.prediction.qp;
    const auto records = join_records(test, pred);
    row.report = score(records);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string removed_groups(const GroupMask& m) {
  std::string s;
  for (Group g : kAllGroups)
    if (!m.enabled(g)) s += group_letter(g);
  return s.empty() ? "-" : s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "mask,removed,n,qp_mae,vmaf_mae,high_vmaf_mae,medium_vmaf_mae,low_vmaf_mae,coverage2,coverage4\n";
  for (const auto& r : rows) {
    const auto& rep = r.report;
    out << r.mask.to_string() << ',' << removed_groups(r.mask) << ',' << rep.videos << ',' << num(rep.overall.qp.mean)
        << ',' << num(rep.overall.vmaf.mean) << ',' << num(rep.bands[0].vmaf.mean) << ','
        << num(rep.bands[1].vmaf.mean) << ',' << num(rep.bands[2].vmaf.mean) << ',' << num(rep.overall.coverage2)
        << ',' << num(rep.overall.coverage4) << '\n';
  }
}

void write_epoch_csv(std::ostream& out, std::span<const EpochLog> history) {
  out << "epoch,train_loss,val_loss,val_l_a,val_l_b,lr\n";
  out << std::setprecision(17);
  for (const auto& h : history)
    out << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.val_l_a << ',' << h.val_l_b << ',' << h.lr
        << '\n';
}

std::vector<ConfigEntry> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::vector<ConfigEntry> out;
  std::string section, line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string where = path.string() + ":" + std::to_string(n);
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    out.push_back({key, value, n});
  }
  return out;
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace litevp
