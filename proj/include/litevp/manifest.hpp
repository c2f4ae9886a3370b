#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "litevp/rd_oracle.hpp"

namespace litevp {

enum class Split { kTrain, kTest };
const char* split_name(Split s);

struct ManifestEntry {
  std::string id;
  std::string y4m_path;
  std::string bitstream_json_path;
  std::string clip_embed_path;  // may be empty when no embedding exists
  std::vector<RdSample> rd_samples;
  Split split = Split::kTrain;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  // Relative paths in entries resolve against this directory (the manifest's
  // own directory when read from a file).
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
  std::vector<const ManifestEntry*> split(Split s) const;
};

/// JSONL, one entry per line; blank lines are skipped. Keys: id, y4m_path,
/// bitstream_json_path, clip_embed_path, rd_samples ([{"qp", "vmaf"}, ...]),
/// split ("train" | "test"). Throws ParseError for malformed lines and
/// InvalidInput for duplicate ids, split leakage or RD samples the curve fit
/// rejects; messages carry the line number.
Manifest read_manifest(std::istream& in, std::filesystem::path base_dir = {});
Manifest read_manifest(const std::filesystem::path& path);

/// Checks the invariants without parsing (used before writing).
void validate_manifest(const Manifest& m);

void write_manifest(std::ostream& out, const Manifest& m);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

}  // namespace litevp
