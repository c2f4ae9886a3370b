#include "litevp/embedding_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "litevp/error.hpp"

namespace litevp {

namespace {

std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void store_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

ClipEmbedding read_embedding(std::istream& in) {
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < 16) throw FormatError("embedding: header truncated (" + std::to_string(data.size()) + " bytes)");
  if (std::memcmp(p, "LVPE", 4) != 0) throw FormatError("embedding: bad magic");
  const std::uint32_t version = load_u32(p + 4);
  if (version != kEmbeddingVersion) throw VersionError("embedding: version " + std::to_string(version) + ", expected 1");
  const std::uint32_t frames = load_u32(p + 8);
  const std::uint32_t dim = load_u32(p + 12);
  if (frames != kClipFrames || dim != kClipDim) {
    throw FormatError("embedding: dims " + std::to_string(frames) + "x" + std::to_string(dim) + ", expected 8x512");
  }
  const std::size_t want = 16 + std::size_t{kClipFrames} * kClipDim * 4;
  if (data.size() != want) {
    throw FormatError("embedding: payload length " + std::to_string(data.size() - 16) + " bytes, expected " +
                      std::to_string(want - 16));
  }
  ClipEmbedding e;
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    const float v = std::bit_cast<float>(load_u32(p + 16 + 4 * i));
    if (!std::isfinite(v)) {
      throw InvalidInput("embedding: non-finite at (" + std::to_string(i / kClipDim) + ", " +
                         std::to_string(i % kClipDim) + ")");
    }
    e.values[i] = v;
  }
  return e;
}

ClipEmbedding read_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_embedding(in);
}

void write_embedding(std::ostream& out, const ClipEmbedding& e) {
  if (e.values.size() != std::size_t{kClipFrames} * kClipDim) throw InvalidInput("embedding must hold 8x512 values");
  std::string buf = "LVPE";
  store_u32(buf, kEmbeddingVersion);
  store_u32(buf, kClipFrames);
  store_u32(buf, kClipDim);
  for (float v : e.values) store_u32(buf, std::bit_cast<std::uint32_t>(v));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("embedding: write failed");
}

void write_embedding(const std::filesystem::path& path, const ClipEmbedding& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_embedding(out, e);
}

EmbeddingCheck validate_embedding(const std::filesystem::path& path) {
  try {
    read_embedding(path);
    return {true, "ok"};
  } catch (const Error& e) {
    return {false, e.what()};
  }
}

}  // namespace litevp
