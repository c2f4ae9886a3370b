#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace litevp {

inline constexpr int kClipFrames = 8;
inline constexpr int kClipDim = 512;
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Raw 8x512 frame embeddings, row-major (frame, dim).
struct ClipEmbedding {
  std::vector<float> values = std::vector<float>(kClipFrames * kClipDim, 0.0f);

  float at(int frame, int d) const { return values[static_cast<std::size_t>(frame) * kClipDim + d]; }
};

// Sidecar layout: "LVPE", u32 version, u32 n_frames, u32 dim, then
// n_frames * dim little-endian float32. Nothing may follow the payload.

/// Throws FormatError for structural problems, VersionError for a version
/// other than 1, InvalidInput for non-finite values.
ClipEmbedding read_embedding(std::istream& in);
ClipEmbedding read_embedding(const std::filesystem::path& path);

void write_embedding(std::ostream& out, const ClipEmbedding& e);
void write_embedding(const std::filesystem::path& path, const ClipEmbedding& e);

struct EmbeddingCheck {
  bool ok = false;
  std::string message;  // "ok" or the first violation found
};

/// Same checks as read_embedding, reported instead of thrown.
EmbeddingCheck validate_embedding(const std::filesystem::path& path);

}  // namespace litevp
