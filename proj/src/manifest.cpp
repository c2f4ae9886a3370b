#include "litevp/manifest.hpp"

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "litevp/error.hpp"

namespace litevp {

using nlohmann::json;

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

std::filesystem::path Manifest::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

std::vector<const ManifestEntry*> Manifest::split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

namespace {

std::string str_field(const json& j, const char* key, bool required, const std::string& where) {
  if (!j.contains(key)) {
    if (required) throw ParseError(where + ": missing \"" + key + "\"");
    return {};
  }
  if (!j[key].is_string()) throw ParseError(where + ": \"" + key + "\" must be a string");
  return j[key].get<std::string>();
}

ManifestEntry parse_entry(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  static const std::set<std::string> known = {"id",        "y4m_path",   "bitstream_json_path", "clip_embed_path",
                                              "rd_samples", "split"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ParseError(where + ": unknown key \"" + k + "\"");

  ManifestEntry e;
  e.id = str_field(j, "id", true, where);
  if (e.id.empty()) throw ParseError(where + ": empty id");
  if (e.id.find_first_of("/\\") != std::string::npos) throw ParseError(where + ": id must not contain path separators");
  e.y4m_path = str_field(j, "y4m_path", true, where);
  e.bitstream_json_path = str_field(j, "bitstream_json_path", true, where);
  e.clip_embed_path = str_field(j, "clip_embed_path", false, where);

  const auto split = str_field(j, "split", true, where);
  if (split == "train") e.split = Split::kTrain;
  else if (split == "test") e.split = Split::kTest;
  else throw ParseError(where + ": split must be \"train\" or \"test\", got \"" + split + "\"");

  if (!j.contains("rd_samples") || !j["rd_samples"].is_array())
    throw ParseError(where + ": \"rd_samples\" must be an array");
  for (const auto& s : j["rd_samples"]) {
    if (!s.is_object() || !s.contains("qp") || !s.contains("vmaf") || !s["qp"].is_number_integer() ||
        !s["vmaf"].is_number())
      throw ParseError(where + ": rd_samples entries must be {\"qp\": int, \"vmaf\": number}");
    e.rd_samples.push_back({s["qp"].get<int>(), s["vmaf"].get<double>()});
  }
  return e;
}

void check_entries(const std::vector<ManifestEntry>& entries, const std::vector<std::size_t>& lines) {
  std::map<std::string, std::pair<Split, std::size_t>> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string where = lines.empty() ? "entry " + std::to_string(i + 1) : "line " + std::to_string(lines[i]);
    const auto [it, fresh] = seen.emplace(e.id, std::pair{e.split, lines.empty() ? i + 1 : lines[i]});
    if (!fresh) {
      const std::string first = std::to_string(it->second.second);
      if (it->second.first != e.split)
        throw InvalidInput("manifest " + where + ": split leakage: id \"" + e.id + "\" is in both train and test (first at " +
                           first + ")");
      throw InvalidInput("manifest " + where + ": duplicate id \"" + e.id + "\" (first at " + first + ")");
    }
    try {
      (void)RdCurve::fit(e.rd_samples);
    } catch (const Error& err) {
      throw InvalidInput("manifest " + where + " (" + e.id + "): rd_samples: " + err.what());
    }
  }
}

json entry_json(const ManifestEntry& e) {
  json samples = json::array();
  for (const auto& s : e.rd_samples) samples.push_back({{"qp", s.qp}, {"vmaf", s.vmaf}});
  json j = {{"id", e.id}, {"y4m_path", e.y4m_path}, {"bitstream_json_path", e.bitstream_json_path}};
  if (!e.clip_embed_path.empty()) j["clip_embed_path"] = e.clip_embed_path;
  j["rd_samples"] = std::move(samples);
  j["split"] = split_name(e.split);
  return j;
}

}  // namespace

Manifest read_manifest(std::istream& in, std::filesystem::path base_dir) {
  Manifest m;
  m.base_dir = std::move(base_dir);
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(n);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    m.entries.push_back(parse_entry(j, where));
    lines.push_back(n);
  }
  if (m.entries.empty()) throw InvalidInput("manifest: no entries");
  check_entries(m.entries, lines);
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    return read_manifest(in, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void validate_manifest(const Manifest& m) {
  if (m.entries.empty()) throw InvalidInput("manifest: no entries");
  check_entries(m.entries, {});
}

void write_manifest(std::ostream& out, const Manifest& m) {
  validate_manifest(m);
  for (const auto& e : m.entries) out << entry_json(e).dump() << '\n';
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_manifest(out, m);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace litevp
