#include "cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "litevp/embedding_file.hpp"
#include "litevp/error.hpp"
#include "litevp/eval.hpp"
#include "litevp/manifest.hpp"
#include "litevp/model.hpp"
#include "litevp/pipeline.hpp"
#include "litevp/synth.hpp"

namespace litevp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Bad flags or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  unsigned jobs = 0;
  bool quiet = false;

  void log(const std::string& msg) const {
    if (!quiet) err << "litevp: " << msg << '\n';
  }
};

// Writes to a file (atomically) or to the context's stdout.
void emit(const Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    ctx.out << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot create " + tmp.string());
    f << text;
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::pair<std::string, std::string> split_kv(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got \"" + kv + "\"");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

GroupMask parse_mask(const std::string& text) {
  try {
    return GroupMask::parse(text);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw UsageError("--split must be train, test or all");
}

// Options shared by the commands that train.
struct TrainOptions {
  std::string config;
  std::vector<std::string> sets;
  int epochs = 0;
  double lr = 0;
  int batch_size = 0;
  std::uint64_t seed = 0;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "key = value config file ([scheduler] section allowed)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override one config key, e.g. --set learning_rate=1e-3 (repeatable)");
    epochs_opt = cmd->add_option("--epochs", epochs, "max_epochs");
    lr_opt = cmd->add_option("--lr", lr, "learning_rate");
    batch_opt = cmd->add_option("--batch-size", batch_size, "batch_size");
    seed_opt = cmd->add_option("--seed", seed, "training seed");
  }

  // defaults < config file < --set < dedicated flags
  TrainConfig resolve() const {
    TrainConfig cfg;
    auto apply = [&](const std::string& key, const std::string& value, const std::string& where) {
      try {
        cfg.set(key, value);
      } catch (const InvalidInput& e) {
        throw UsageError(where + ": " + e.what());
      }
    };
    if (!config.empty()) {
      for (const auto& e : read_config_file(config)) {
        if (e.key.starts_with("synth.")) continue;
        const std::string key = e.key.starts_with("train.") ? e.key.substr(6) : e.key;
        apply(key, e.value, config + ":" + std::to_string(e.line));
      }
    }
    for (const auto& kv : sets) {
      const auto [k, v] = split_kv(kv);
      apply(k, v, "--set");
    }
    if (epochs_opt->count()) cfg.max_epochs = epochs;
    if (lr_opt->count()) cfg.learning_rate = lr;
    if (batch_opt->count()) cfg.batch_size = batch_size;
    if (seed_opt->count()) cfg.seed = seed;
    try {
      cfg.validate();
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

Manifest load_manifest(const std::string& path) { return read_manifest(fs::path(path)); }

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

// ---- synth

struct SynthArgs {
  std::string out_dir, config;
  std::vector<std::string> sets;
  int n_videos = 0;
  std::uint64_t seed = 0;
  CLI::Option* n_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

int cmd_synth(const Context& ctx, const SynthArgs& a) {
  SyntheticSpec spec;
  auto apply = [&](const std::string& key, const std::string& value, const std::string& where) {
    try {
      spec.set(key, value);
    } catch (const InvalidInput& e) {
      throw UsageError(where + ": " + e.what());
    }
  };
  if (!a.config.empty())
    for (const auto& e : read_config_file(a.config))
      if (e.key.starts_with("synth.")) apply(e.key.substr(6), e.value, a.config + ":" + std::to_string(e.line));
  for (const auto& kv : a.sets) {
    const auto [k, v] = split_kv(kv);
    apply(k, v, "--set");
  }
  if (a.n_opt->count()) spec.n_videos = a.n_videos;
  if (a.seed_opt->count()) spec.seed = a.seed;
  try {
    spec.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  ctx.log("synth config hash " + config_hash(spec.to_json()));
  const Manifest m = synth_corpus(spec, a.out_dir, ctx.jobs);
  ctx.log("synth: " + std::to_string(m.split(Split::kTrain).size()) + " train, " +
          std::to_string(m.split(Split::kTest).size()) + " test videos in " + a.out_dir);
  ctx.out << (fs::path(a.out_dir) / "manifest.jsonl").string() << '\n';
  return kExitOk;
}

// ---- extract

int cmd_extract(const Context& ctx, const std::string& manifest, const std::string& out_dir, bool force) {
  const Manifest m = load_manifest(manifest);
  const auto report = extract_all(m, out_dir, force, ctx.jobs, [&](const ExtractItem& item) {
    if (item.status == ItemStatus::kFailed) ctx.err << "litevp: extract " << item.id << ": " << item.message << '\n';
  });
  const auto failed = report.count(ItemStatus::kFailed);
  ctx.log("extract: " + std::to_string(report.count(ItemStatus::kWritten)) + " written, " +
          std::to_string(report.count(ItemStatus::kSkipped)) + " skipped, " + std::to_string(failed) + " failed");
  return failed ? kExitFailure : kExitOk;
}

// ---- fit-curves

int cmd_fit_curves(const Context& ctx, const std::string& manifest, const std::string& out) {
  const Manifest m = load_manifest(manifest);
  std::string text;
  for (const auto& e : m.entries) text += fit_curve_json(e).dump() + "\n";
  emit(ctx, out, text);
  return kExitOk;
}

// ---- train

struct TrainArgs {
  std::string manifest, features, out, log_csv, mask = "all";
  TrainOptions opts;
};

int cmd_train(const Context& ctx, const TrainArgs& a) {
  const TrainConfig cfg = a.opts.resolve();
  const GroupMask mask = parse_mask(a.mask);
  ctx.log("train config hash " +
          config_hash({{"command", "train"}, {"config", cfg.to_json()}, {"mask", mask.to_string()}}));
  const Manifest m = load_manifest(a.manifest);
  const auto samples = load_samples(m, Split::kTrain, a.features, mask.enabled(Group::kClip));
  ctx.log("train: " + std::to_string(samples.size()) + " videos, mask " + mask.to_string());
  const ModelCheckpoint ckpt = train(samples, cfg, mask, [&](const EpochLog& e) {
    ctx.log("epoch " + std::to_string(e.epoch) + " train " + fmt(e.train_loss) + " val " + fmt(e.val_loss) + " lr " +
            fmt(e.lr));
  });
  save_checkpoint(fs::path(a.out), ckpt);
  std::ostringstream csv;
  write_epoch_csv(csv, ckpt.history);
  emit(ctx, a.log_csv.empty() ? a.out + ".epochs.csv" : a.log_csv, csv.str());
  ctx.log("train: best epoch " + std::to_string(ckpt.best_epoch) + ", wrote " + a.out);
  return kExitOk;
}

// ---- predict

struct PredictArgs {
  std::string checkpoint, manifest, features, input, split = "test", out;
};

std::vector<TrainSample> samples_for(const Manifest& m, const std::string& split, const std::string& features,
                                     bool embeddings) {
  if (split == "all") {
    auto a = load_samples(m, Split::kTrain, features, embeddings);
    auto b = load_samples(m, Split::kTest, features, embeddings);
    a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
    return a;
  }
  return load_samples(m, parse_split(split), features, embeddings);
}

int cmd_predict(const Context& ctx, const PredictArgs& a) {
  const ModelCheckpoint ckpt = load_checkpoint(fs::path(a.checkpoint));
  const bool clip = ckpt.mask.enabled(Group::kClip);
  std::vector<PredictionRow> rows;
  if (!a.input.empty()) {
    // {"videos": [{"id"?, "features": {...}, "embedding"?: path}]}; paths
    // relative to the input file.
    std::ifstream in(a.input);
    if (!in) throw IoError("cannot open " + a.input);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError(a.input + ": " + e.what());
    }
    const fs::path base = fs::path(a.input).parent_path();
    std::vector<TrainSample> samples;
    std::size_t i = 0;
    try {
      for (const auto& v : doc.at("videos")) {
        TrainSample s;
        s.id = v.contains("id") ? v["id"].get<std::string>() : "video" + std::to_string(i);
        s.raw = RawFeatures::from_json(v.at("features"));
        if (clip && v.contains("embedding")) s.embedding = read_embedding(base / v["embedding"].get<std::string>());
        samples.push_back(std::move(s));
        ++i;
      }
    } catch (const json::exception& e) {
      throw ParseError(a.input + ": " + e.what());
    }
    rows = predict_samples(ckpt, samples);
  } else {
    if (a.manifest.empty() || a.features.empty()) throw UsageError("predict needs --input or --manifest and --features");
    const Manifest m = load_manifest(a.manifest);
    rows = predict_samples(ckpt, samples_for(m, a.split, a.features, clip));
  }
  std::ostringstream s;
  write_predictions(s, rows);
  emit(ctx, a.out, s.str());
  ctx.log("predict: " + std::to_string(rows.size()) + " videos");
  return kExitOk;
}

// ---- eval

struct EvalArgs {
  std::string manifest, predictions, checkpoint, features, split = "test", out_dir;
  bool per_target_mean = false;
  bool baseline = false;
};

EvalReport rename_scopes(EvalReport r, const std::string& prefix) {
  r.overall.name = prefix + r.overall.name;
  for (auto& b : r.bands) b.name = prefix + b.name;
  return r;
}

int cmd_eval(const Context& ctx, const EvalArgs& a) {
  const Manifest m = load_manifest(a.manifest);
  std::vector<TrainSample> truth;
  auto pick = [&](Split s) {
    for (const ManifestEntry* e : m.split(s)) truth.push_back(ground_truth(*e));
  };
  if (a.split == "all") {
    pick(Split::kTrain);
    pick(Split::kTest);
  } else {
    pick(parse_split(a.split));
  }

  std::map<std::string, std::array<double, kNumTargets>> pred;
  if (!a.predictions.empty()) {
    pred = read_predictions(a.predictions);
  } else {
    if (a.checkpoint.empty() || a.features.empty())
      throw UsageError("eval needs --predictions or --checkpoint and --features");
    const ModelCheckpoint ckpt = load_checkpoint(fs::path(a.checkpoint));
    const auto samples = samples_for(m, a.split, a.features, ckpt.mask.enabled(Group::kClip));
    for (const auto& r : predict_samples(ckpt, samples)) pred[r.id] = r.prediction.qp;
  }

  ScoreOptions opts;
  opts.per_target_mean = a.per_target_mean;
  const auto records = join_records(truth, pred);
  const EvalReport report = score(records, opts);
  const auto outliers = jnd_outliers(records);

  std::ostringstream summary;
  write_summary_csv(summary, report);
  std::optional<EvalReport> base;
  if (a.baseline) {
    std::vector<TrainSample> train;
    for (const ManifestEntry* e : m.split(Split::kTrain)) train.push_back(ground_truth(*e));
    base = rename_scopes(score(constant_records(truth, mean_qp(train)), opts), "baseline_");
    std::ostringstream b;
    write_summary_csv(b, *base);
    std::string rows = b.str();
    summary << rows.substr(rows.find('\n') + 1);  // drop the repeated header
  }

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    json rep = to_json(report);
    if (base) rep["baseline"] = to_json(*base);
    emit(ctx, (fs::path(a.out_dir) / "report.json").string(), rep.dump(2) + "\n");
    emit(ctx, (fs::path(a.out_dir) / "summary.csv").string(), summary.str());
    std::ostringstream cdf, box;
    write_cdf_csv(cdf, report);
    write_boxplot_csv(box, report);
    emit(ctx, (fs::path(a.out_dir) / "cdf.csv").string(), cdf.str());
    emit(ctx, (fs::path(a.out_dir) / "boxplot.csv").string(), box.str());
    emit(ctx, (fs::path(a.out_dir) / "outliers.json").string(), to_json(outliers).dump(2) + "\n");
  }
  ctx.out << summary.str();
  ctx.log("eval: " + std::to_string(report.videos) + " videos, " + std::to_string(outliers.size()) +
          " with an error of at least one JND");
  return kExitOk;
}

// ---- ablate

struct AblateArgs {
  std::string manifest, features, out;
  std::vector<std::string> masks = {"all", "-F", "-V", "-M", "-A", "-C"};
  TrainOptions opts;
};

int cmd_ablate(const Context& ctx, const AblateArgs& a) {
  const TrainConfig cfg = a.opts.resolve();
  std::vector<GroupMask> masks;
  bool clip = false;
  json mask_names = json::array();
  for (const auto& s : a.masks) {
    masks.push_back(parse_mask(s));
    clip = clip || masks.back().enabled(Group::kClip);
    mask_names.push_back(masks.back().to_string());
  }
  ctx.log("ablate config hash " +
          config_hash({{"command", "ablate"}, {"config", cfg.to_json()}, {"masks", mask_names}}));
  const Manifest m = load_manifest(a.manifest);
  const auto train_set = load_samples(m, Split::kTrain, a.features, clip);
  const auto test_set = load_samples(m, Split::kTest, a.features, clip);
  const auto rows = ablate(train_set, test_set, masks, cfg, [&](const GroupMask& mask, const EpochLog& e) {
    ctx.log("[" + mask.to_string() + "] epoch " + std::to_string(e.epoch) + " train " + fmt(e.train_loss) + " val " +
            fmt(e.val_loss));
  });
  std::ostringstream csv;
  write_ablation_csv(csv, rows);
  emit(ctx, a.out, csv.str());
  return kExitOk;
}

// ---- complexity

int cmd_complexity(const Context& ctx, const std::string& video, const std::string& bitstream, bool per_frame) {
  std::vector<bool> keys;
  if (!bitstream.empty()) {
    std::ifstream in(bitstream);
    if (!in) throw IoError("cannot open " + bitstream);
    try {
      keys = parse_bitstream_json(json::parse(in)).stats.key_frames;
    } catch (const json::exception& e) {
      throw ParseError(bitstream + ": " + e.what());
    }
  }
  const VideoComplexity vc = video_complexity(fs::path(video), keys);
  static constexpr const char* kMetric[] = {"sc", "tc", "brightness"};
  static constexpr const char* kPart[] = {"intra", "inter"};
  json stats = json::object();
  for (int mi = 0; mi < 3; ++mi)
    for (int p = 0; p < 2; ++p) {
      const auto idx = static_cast<std::size_t>(mi * 2 + p);
      const auto& s = vc.stats.groups[idx];
      stats[std::string(kMetric[mi]) + "_" + kPart[p]] = {{"valid", bool(vc.stats.valid[idx])},
                                                          {"mean", s.mean},
                                                          {"std", s.std},
                                                          {"min", s.min},
                                                          {"max", s.max},
                                                          {"p25", s.p25},
                                                          {"p50", s.p50},
                                                          {"p75", s.p75}};
    }
  json doc = {{"video", video},
              {"frames", vc.per_frame.size()},
              {"analysis_width", std::min(vc.meta.width, kAnalysisWidth)},
              {"analysis_height", std::min(vc.meta.height, kAnalysisHeight)},
              {"stats", stats},
              {"values", vc.stats.to_array()}};
  json iframes = json::array();
  for (std::size_t i = 0; i < vc.iframes.size(); ++i)
    if (vc.iframes[i]) iframes.push_back(i);
  doc["iframes"] = iframes;
  if (per_frame) {
    json rows = json::array();
    for (const auto& f : vc.per_frame)
      rows.push_back({{"sc", f.sc}, {"tc", f.tc ? json(*f.tc) : json(nullptr)}, {"brightness", f.brightness}});
    doc["per_frame"] = rows;
  }
  ctx.out << doc.dump(2) << '\n';
  return kExitOk;
}

// ---- rd-interp

struct RdArgs {
  std::string samples, manifest, id;
  std::vector<double> qps, vmafs;
};

int cmd_rd_interp(const Context& ctx, const RdArgs& a) {
  std::vector<RdSample> samples;
  if (!a.samples.empty()) {
    std::ifstream in(a.samples);
    if (!in) throw IoError("cannot open " + a.samples);
    try {
      for (const auto& s : json::parse(in)) samples.push_back({s.at("qp").get<int>(), s.at("vmaf").get<double>()});
    } catch (const json::exception& e) {
      throw ParseError(a.samples + ": " + e.what());
    }
  } else {
    if (a.manifest.empty() || a.id.empty()) throw UsageError("rd-interp needs --samples or --manifest and --id");
    const Manifest m = load_manifest(a.manifest);
    for (const auto& e : m.entries)
      if (e.id == a.id) samples = e.rd_samples;
    if (samples.empty()) throw InvalidInput(a.manifest + ": no entry with id " + a.id);
  }
  const RdCurve curve = RdCurve::fit(samples);
  const QualityTargets t = derive_targets(curve);
  json doc;
  json knots = json::array();
  for (std::size_t i = 0; i < curve.knots_qp().size(); ++i)
    knots.push_back({curve.knots_qp()[i], curve.knots_vmaf()[i]});
  doc["knots"] = knots;
  json targets = json::array();
  for (std::size_t k = 0; k < kNumTargets; ++k)
    targets.push_back({{"vmaf", t.vmaf_targets[k]}, {"qp", t.derived_qps[k].qp}, {"reachable", t.derived_qps[k].reachable}});
  doc["targets"] = targets;
  json ev = json::array();
  for (double qp : a.qps) ev.push_back({{"qp", qp}, {"vmaf", curve.evaluate(qp)}, {"slope", curve.derivative(qp)}});
  if (!ev.empty()) doc["evaluate"] = ev;
  json inv = json::array();
  for (double v : a.vmafs) {
    const TargetQp q = invert(curve, v);
    inv.push_back({{"vmaf", v}, {"qp", q.qp}, {"reachable", q.reachable}});
  }
  if (!inv.empty()) doc["invert"] = inv;
  ctx.out << doc.dump(2) << '\n';
  return kExitOk;
}

// ---- validate-embedding

int cmd_validate_embedding(const Context& ctx, const std::vector<std::string>& paths) {
  int rc = kExitOk;
  for (const auto& p : paths) {
    const EmbeddingCheck c = validate_embedding(p);
    ctx.out << p << ": " << c.message << '\n';
    if (!c.ok) rc = kExitFailure;
  }
  return rc;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predict AV1 QPs that hit VMAF targets from low-complexity features.", "litevp"};
  app.require_subcommand(1);
  Context ctx{out, err};
  app.add_option("-j,--jobs", ctx.jobs, "worker threads for batch commands (0 = all cores)")->capture_default_str();
  app.add_flag("-q,--quiet", ctx.quiet, "only print errors");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus with planted structure");
  c_synth->add_option("-o,--out", synth.out_dir, "output directory")->required();
  synth.n_opt = c_synth->add_option("-n,--n-videos", synth.n_videos, "number of videos (default 512)");
  synth.seed_opt = c_synth->add_option("--seed", synth.seed, "corpus seed (default 1)");
  c_synth->add_option("--config", synth.config, "config file; keys under [synth]")->check(CLI::ExistingFile);
  c_synth->add_option("--set", synth.sets, "override one spec key, e.g. --set c_noise=0.05");

  std::string ex_manifest, ex_out;
  bool ex_force = false;
  auto* c_extract = app.add_subcommand("extract", "write raw feature JSON per manifest entry");
  c_extract->add_option("-m,--manifest", ex_manifest, "manifest JSONL")->required()->check(CLI::ExistingFile);
  c_extract->add_option("-o,--out", ex_out, "feature directory")->required();
  c_extract->add_flag("--force", ex_force, "recompute existing feature files");

  std::string fc_manifest, fc_out;
  auto* c_fit = app.add_subcommand("fit-curves", "fit RD curves and derive the 8 target QPs per video");
  c_fit->add_option("-m,--manifest", fc_manifest, "manifest JSONL")->required()->check(CLI::ExistingFile);
  c_fit->add_option("-o,--out", fc_out, "output JSONL (default stdout)");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train on the manifest's train split");
  c_train->add_option("-m,--manifest", tr.manifest, "manifest JSONL")->required()->check(CLI::ExistingFile);
  c_train->add_option("-f,--features", tr.features, "feature directory from extract")->required();
  c_train->add_option("-o,--out", tr.out, "checkpoint path")->required();
  c_train->add_option("--log", tr.log_csv, "epoch log CSV (default <out>.epochs.csv)");
  c_train->add_option("--mask", tr.mask, "feature groups: all, FVMA, -C, ...")->capture_default_str();
  tr.opts.add(c_train);

  PredictArgs pr;
  auto* c_predict = app.add_subcommand("predict", "predict the 8 QPs per video");
  c_predict->add_option("-c,--checkpoint", pr.checkpoint, "checkpoint")->required()->check(CLI::ExistingFile);
  auto* pr_manifest = c_predict->add_option("-m,--manifest", pr.manifest, "manifest JSONL")->check(CLI::ExistingFile);
  c_predict->add_option("-f,--features", pr.features, "feature directory");
  c_predict->add_option("--split", pr.split, "train, test or all")->capture_default_str();
  c_predict->add_option("--input", pr.input, "JSON {\"videos\": [{\"features\", \"embedding\"}]} instead of a manifest")
      ->check(CLI::ExistingFile)
      ->excludes(pr_manifest);
  c_predict->add_option("-o,--out", pr.out, "predictions JSONL (default stdout)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "score predictions against the RD curves");
  c_eval->add_option("-m,--manifest", ev.manifest, "manifest JSONL")->required()->check(CLI::ExistingFile);
  auto* ev_pred = c_eval->add_option("-p,--predictions", ev.predictions, "predictions JSONL")->check(CLI::ExistingFile);
  c_eval->add_option("-c,--checkpoint", ev.checkpoint, "predict with this checkpoint instead")
      ->check(CLI::ExistingFile)
      ->excludes(ev_pred);
  c_eval->add_option("-f,--features", ev.features, "feature directory (with --checkpoint)");
  c_eval->add_option("--split", ev.split, "train, test or all")->capture_default_str();
  c_eval->add_option("-o,--out-dir", ev.out_dir, "write report.json, summary.csv, cdf.csv, boxplot.csv, outliers.json");
  c_eval->add_flag("--per-target-mean", ev.per_target_mean, "MAE as the mean of per-target means");
  c_eval->add_flag("--baseline", ev.baseline, "also score the constant mean-QP baseline");

  AblateArgs ab;
  auto* c_ablate = app.add_subcommand("ablate", "retrain per feature mask and compare on the test split");
  c_ablate->add_option("-m,--manifest", ab.manifest, "manifest JSONL")->required()->check(CLI::ExistingFile);
  c_ablate->add_option("-f,--features", ab.features, "feature directory")->required();
  c_ablate->add_option("--masks", ab.masks, "comma-separated masks")->delimiter(',')->capture_default_str();
  c_ablate->add_option("-o,--out", ab.out, "comparison CSV (default stdout)");
  ab.opts.add(c_ablate);

  std::string cx_video, cx_bitstream;
  bool cx_per_frame = false;
  auto* c_cx = app.add_subcommand("complexity", "print the 42 complexity statistics of a Y4M as JSON");
  c_cx->add_option("video", cx_video, "Y4M file")->required()->check(CLI::ExistingFile);
  c_cx->add_option("--bitstream", cx_bitstream, "bitstream JSON whose KEY frames mark extra I-frames")
      ->check(CLI::ExistingFile);
  c_cx->add_flag("--per-frame", cx_per_frame, "include per-frame SC/TC/brightness");

  RdArgs rd;
  auto* c_rd = app.add_subcommand("rd-interp", "fit one RD curve; evaluate or invert it");
  auto* rd_samples = c_rd->add_option("-s,--samples", rd.samples, "JSON array of {\"qp\", \"vmaf\"}")
                         ->check(CLI::ExistingFile);
  c_rd->add_option("-m,--manifest", rd.manifest, "manifest JSONL")->check(CLI::ExistingFile)->excludes(rd_samples);
  c_rd->add_option("--id", rd.id, "video id in the manifest");
  c_rd->add_option("--qp", rd.qps, "QPs to evaluate")->delimiter(',');
  c_rd->add_option("--vmaf", rd.vmafs, "VMAF values to invert")->delimiter(',');

  std::vector<std::string> ve_paths;
  auto* c_ve = app.add_subcommand("validate-embedding", "check embedding sidecar files");
  c_ve->add_option("files", ve_paths, "embedding files")->required();

  std::vector<std::string> argv_store = {"litevp"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(ctx, synth);
    if (c_extract->parsed()) return cmd_extract(ctx, ex_manifest, ex_out, ex_force);
    if (c_fit->parsed()) return cmd_fit_curves(ctx, fc_manifest, fc_out);
    if (c_train->parsed()) return cmd_train(ctx, tr);
    if (c_predict->parsed()) return cmd_predict(ctx, pr);
    if (c_eval->parsed()) return cmd_eval(ctx, ev);
    if (c_ablate->parsed()) return cmd_ablate(ctx, ab);
    if (c_cx->parsed()) return cmd_complexity(ctx, cx_video, cx_bitstream, cx_per_frame);
    if (c_rd->parsed()) return cmd_rd_interp(ctx, rd);
    if (c_ve->parsed()) return cmd_validate_embedding(ctx, ve_paths);
  } catch (const UsageError& e) {
    err << "litevp: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "litevp: error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace litevp::cli
