#pragma once

// Batch operations behind the command-line tool: feature extraction, curve
// fitting, dataset loading, prediction files, baselines and ablation.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "litevp/eval.hpp"
#include "litevp/manifest.hpp"
#include "litevp/model.hpp"

namespace litevp {

struct VideoComplexity {
  VideoMeta meta;
  std::vector<bool> iframes;
  std::vector<FrameComplexity> per_frame;
  ComplexityStats stats;
};

/// Complexity over every frame of a Y4M, downsampled to 480x270 only when
/// larger. Frame 0 and every true entry of `key_frames` count as I-frames.
VideoComplexity video_complexity(const std::filesystem::path& y4m, const std::vector<bool>& key_frames = {});
VideoComplexity video_complexity(Y4mVideo video, const std::vector<bool>& key_frames = {});

/// Raw features for one entry: bitstream groups from the JSON (Y4M header as
/// metadata fallback) and video_complexity() with the JSON's KEY frames.
RawFeatures extract_features(const Manifest& m, const ManifestEntry& e);

std::filesystem::path feature_path(const std::filesystem::path& dir, const std::string& id);
/// RawFeatures JSON plus an "id" key.
void write_feature_file(const std::filesystem::path& path, const std::string& id, const RawFeatures& raw);
RawFeatures read_feature_file(const std::filesystem::path& path);

enum class ItemStatus { kWritten, kSkipped, kFailed };

struct ExtractItem {
  std::string id;
  ItemStatus status = ItemStatus::kFailed;
  std::string message;
};

struct ExtractReport {
  std::vector<ExtractItem> items;  // manifest order
  std::size_t count(ItemStatus s) const;
};

/// Writes <out_dir>/<id>.features.json per entry. Existing outputs are kept
/// unless `force`; a failing entry is recorded and the rest continue.
ExtractReport extract_all(const Manifest& m, const std::filesystem::path& out_dir, bool force, unsigned jobs,
                          const std::function<void(const ExtractItem&)>& on_item = {});

/// One JSON object per entry: id, split, qp range and the derived targets.
nlohmann::json fit_curve_json(const ManifestEntry& e);

/// Curve and ground-truth target QPs only (no features).
TrainSample ground_truth(const ManifestEntry& e);

/// Curve and ground-truth target QPs for each entry of `split`, joined with
/// its feature file. Embeddings are loaded when `load_embeddings`; an entry
/// without clip_embed_path then throws InvalidInput.
std::vector<TrainSample> load_samples(const Manifest& m, Split split, const std::filesystem::path& features_dir,
                                      bool load_embeddings);

struct PredictionRow {
  std::string id;
  Prediction prediction;
};

std::vector<PredictionRow> predict_samples(const ModelCheckpoint& ckpt, std::span<const TrainSample> samples);

/// JSONL: {"id", "qp", "qp_norm", "vmaf_targets"} per line.
void write_predictions(std::ostream& out, std::span<const PredictionRow> rows);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows);
std::map<std::string, std::array<double, kNumTargets>> read_predictions(const std::filesystem::path& path);

/// Eval records for `samples` (ground truth) against predicted QPs by id.
/// Throws InvalidInput when a sample has no prediction.
std::vector<EvalRecord> join_records(std::span<const TrainSample> samples,
                                     const std::map<std::string, std::array<double, kNumTargets>>& qp_pred);

/// Per-target mean of the training QPs, predicted for every video.
std::array<double, kNumTargets> mean_qp(std::span<const TrainSample> train);
std::vector<EvalRecord> constant_records(std::span<const TrainSample> test, const std::array<double, kNumTargets>& qp);

struct AblationRow {
  GroupMask mask;
  EvalReport report;
  std::vector<EpochLog> history;
  int best_epoch = 0;
};

/// Retrains per mask on `train` and scores on `test`.
std::vector<AblationRow> ablate(std::span<const TrainSample> train_set, std::span<const TrainSample> test,
                                std::span<const GroupMask> masks, const TrainConfig& cfg,
                                const std::function<void(const GroupMask&, const EpochLog&)>& on_epoch = {});

/// mask,removed,n,qp_mae,vmaf_mae,high_vmaf_mae,medium_vmaf_mae,low_vmaf_mae,coverage2,coverage4
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

/// epoch,train_loss,val_loss,val_l_a,val_l_b,lr
void write_epoch_csv(std::ostream& out, std::span<const EpochLog> history);

// Key/value configuration files: "key = value" lines, '#' comments,
// optional [section] headers that prefix following keys with "section.".
// Values may be double-quoted.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a 64 over the compact JSON dump.
std::string config_hash(const nlohmann::json& j);

}  // namespace litevp
