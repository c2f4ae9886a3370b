#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "litevp/embedding_file.hpp"
#include "litevp/features.hpp"
#include "litevp/nn.hpp"
#include "litevp/rd_oracle.hpp"
#include "litevp/train_config.hpp"

namespace litevp {

/// Layer widths. The defaults are the production network; tests shrink them
/// for finite-difference checks.
struct Architecture {
  std::size_t tokens = kClipFrames;
  std::size_t clip_dim = kClipDim;
  std::size_t clip_out = 16;
  std::size_t input = kFeatureDim;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 128;  // must be hidden1 / 2 (pairwise-average skip)
  std::size_t hidden3 = 64;
  std::size_t outputs = kNumTargets;

  /// The ClipNet output occupies the last clip_out input columns.
  std::size_t clip_offset() const { return input - clip_out; }
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

struct ModelTrace;

/// ClipNet (self-attention over the 8 frame embeddings, pooled and projected
/// to 16) feeding the Ĉ slot of the head:
///
///   h1 = drop(gelu(bn1(d1(x))))
///   h2 = drop(gelu(bn2(d2(h1)) + pairavg(h1)))
///   h3 = drop(gelu(bn3(d3(h2)) + skip3(h2)))
///   y  = sigmoid(d4(h3))
class LiteVpModel {
 public:
  explicit LiteVpModel(const Architecture& arch = {});

  /// Uniform fan-in init of every dense layer; batchnorm reset to identity.
  void init(std::uint64_t seed);

  const Architecture& arch() const { return arch_; }

  /// Eval mode. `x` is B x input with the clip slot ignored; `emb` is
  /// B x (tokens * clip_dim). When `use_clip` is false the slot is zero and
  /// `emb` may be empty. Output B x outputs in (0, 1).
  Tensor2 predict(const Tensor2& x, const Tensor2& emb, bool use_clip) const;

  /// Train mode forward; `dropout_rate` 0 disables dropout.
  Tensor2 forward_train(const Tensor2& x, const Tensor2& emb, bool use_clip, double dropout_rate, Rng& rng,
                        ModelTrace& trace);
  /// Accumulates gradients for d loss / d output. Returns d loss / d x
  /// (B x input; the clip slot carries the gradient that went into ClipNet).
  Tensor2 backward(const ModelTrace& trace, const Tensor2& dy);

  /// Every tensor in checkpoint order: ClipNet first, then the head.
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::vector<Param*> clip_params() { return clip_.params(); }
  std::vector<Param*> head_params();

  std::size_t clip_param_count() { return count_trainable(clip_params()); }
  std::size_t head_param_count() { return count_trainable(head_params()); }

  /// Rounds every parameter to float32, the on-disk precision.
  void round_to_float();

  SelfAttention& clip() { return clip_; }

 private:
  Tensor2 embed_input(const Tensor2& x, const Tensor2& clip_out, bool use_clip) const;

  Architecture arch_;
  SelfAttention clip_;
  Dense d1_, d2_, d3_, skip3_, d4_;
  BatchNorm bn1_, bn2_, bn3_;
};

struct ModelTrace {
  bool use_clip = false;
  AttentionCache clip;
  Tensor2 x0;  // head input with the clip slot filled
  // a: pre-activation, m: dropout mask (empty when off), h: layer output
  Tensor2 a1, m1, h1;
  Tensor2 a2, m2, h2;
  Tensor2 a3, m3, h3;
  BatchNormCache bn1, bn2, bn3;
  Tensor2 y;
};

/// One video prepared for training or scoring.
struct TrainSample {
  std::string id;
  RawFeatures raw;
  std::optional<ClipEmbedding> embedding;
  RdCurve curve;
  /// Ground-truth QPs for the 8 targets (0..255).
  std::array<double, kNumTargets> target_qp{};
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_l_a = 0.0;
  double val_l_b = 0.0;
  double lr = 0.0;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct ModelCheckpoint {
  std::uint32_t format_version = kCheckpointFormatVersion;
  int layout_version = kLayoutVersion;
  LiteVpModel model;
  Scaler scaler;
  TrainConfig config;
  GroupMask mask;
  std::vector<EpochLog> history;
  int best_epoch = 0;
};

struct Prediction {
  std::array<double, kNumTargets> qp_norm{};
  std::array<double, kNumTargets> qp{};
  std::array<double, kNumTargets> vmaf_targets = kDefaultVmafTargets;
};

/// Builds the head input for one video (clip slot left zero; the model fills it).
FeatureVector model_input(const RawFeatures& raw, const Scaler& scaler, const GroupMask& mask);

/// Eval-mode predictions for a batch of videos. Throws InvalidInput when the
/// Ĉ group is enabled and a video has no embedding.
std::vector<Prediction> predict(const ModelCheckpoint& ckpt, std::span<const RawFeatures* const> raws,
                                std::span<const ClipEmbedding* const> embeddings);
Prediction predict_one(const ModelCheckpoint& ckpt, const RawFeatures& raw, const ClipEmbedding* embedding);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Joint training of ClipNet and head with the tolerant composite loss.
/// A seeded share of the train split (cfg.validation_fraction, at least one
/// video) is held out for validation and the best-validation weights are
/// kept; splits under 10 videos validate on the training data itself.
ModelCheckpoint train(std::span<const TrainSample> samples, const TrainConfig& cfg, const GroupMask& mask,
                      const EpochCallback& on_epoch = {}, const Architecture& arch = {});

/// Checkpoint container: "LVPN", u32 format_version, u32 header length,
/// JSON header, float32 little-endian parameter blob, u32 CRC-32 of the blob.
void save_checkpoint(std::ostream& out, const ModelCheckpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
/// FormatError for bad magic, truncation, trailing bytes, architecture
/// mismatch or CRC mismatch; VersionError for another format or layout version.
ModelCheckpoint load_checkpoint(std::istream& in);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace litevp
