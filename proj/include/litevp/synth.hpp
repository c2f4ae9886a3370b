#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "litevp/manifest.hpp"

namespace litevp {

// Synthetic corpus. Each video has hidden latents in [0, 1]:
//   texture   drives the luma pattern (SC), small-block share, IDTX share, bits
//   motion    drives the per-frame shift (TC), skip share, intra share in
//             inter frames, MV joints and MV bits
//   semantic  visible only through the embedding sidecar
// The RD curve is logistic, vmaf(qp) = 100 / (1 + exp((qp - c) / s)), with
// c and s a fixed linear + interaction function of the latents plus noise.
struct SyntheticSpec {
  int n_videos = 512;
  std::uint64_t seed = 1;
  double c_min = 100.0, c_max = 220.0;
  double s_min = 6.0, s_max = 18.0;
  double c_noise = 0.03;  // sd as a fraction of c_max - c_min
  double s_noise = 0.05;  // sd on the unit-scale s mix
  double feature_noise = 1.0;  // scales nuisance noise in histograms and embeddings
  double test_fraction = 0.2;
  int width = 64, height = 64, frames = 8;

  void validate() const;
  nlohmann::json to_json() const;
  void set(const std::string& key, const std::string& value);
};

struct SyntheticTruth {
  std::string id;
  double texture = 0, motion = 0, semantic = 0;
  double c = 0, s = 0;
};

struct SyntheticVideo {
  SyntheticTruth truth;
  ManifestEntry entry;  // paths relative to the corpus root
};

/// Deterministic in (spec, index); independent of thread count.
SyntheticVideo synth_video(const SyntheticSpec& spec, int index, const std::filesystem::path& root);

/// Writes videos/, bitstream/, clip/, manifest.jsonl, truth.jsonl and
/// synth_spec.json under `root`. Same spec -> byte-identical files.
Manifest synth_corpus(const SyntheticSpec& spec, const std::filesystem::path& root, unsigned jobs = 1);

std::vector<SyntheticTruth> read_truth(const std::filesystem::path& path);

}  // namespace litevp
