#include "litevp/media_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "litevp/error.hpp"

namespace litevp {

namespace {

constexpr char kSignature[] = "YUV4MPEG2";
constexpr char kFrameMarker[] = "FRAME";

int parse_int(const std::string& text, std::uint64_t offset) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("y4m: bad integer '" + text + "' at byte " + std::to_string(offset));
  }
}

struct ChromaFormat {
  Chroma chroma;
  int bit_depth;
};

ChromaFormat parse_colorspace(const std::string& tag, std::uint64_t offset) {
  if (tag == "420" || tag == "420jpeg" || tag == "420paldv" || tag == "420mpeg2") return {Chroma::k420, 8};
  if (tag == "420p10") return {Chroma::k420, 10};
  if (tag == "422") return {Chroma::k422, 8};
  if (tag == "422p10") return {Chroma::k422, 10};
  if (tag == "444") return {Chroma::k444, 8};
  if (tag == "444p10") return {Chroma::k444, 10};
  if (tag == "mono") return {Chroma::kMono, 8};
  if (tag == "mono10") return {Chroma::kMono, 10};
  throw ParseError("y4m: unsupported colorspace 'C" + tag + "' at byte " + std::to_string(offset));
}

std::string colorspace_tag(Chroma chroma, int bit_depth) {
  std::string base;
  switch (chroma) {
    case Chroma::k420: base = "420"; break;
    case Chroma::k422: base = "422"; break;
    case Chroma::k444: base = "444"; break;
    case Chroma::kMono: base = "mono"; break;
  }
  if (bit_depth == 10) base += chroma == Chroma::kMono ? "10" : "p10";
  return base;
}

std::size_t chroma_samples(Chroma chroma, int w, int h) {
  const auto cw = static_cast<std::size_t>((w + 1) / 2);
  const auto ch = static_cast<std::size_t>((h + 1) / 2);
  switch (chroma) {
    case Chroma::k420: return 2 * cw * ch;
    case Chroma::k422: return 2 * cw * static_cast<std::size_t>(h);
    case Chroma::k444: return 2 * static_cast<std::size_t>(w) * h;
    case Chroma::kMono: return 0;
  }
  return 0;
}

// Reads one '\n'-terminated line; returns false on EOF before any byte.
bool read_line(std::istream& in, std::string& line, std::uint64_t& offset) {
  line.clear();
  char c = 0;
  bool any = false;
  while (in.get(c)) {
    ++offset;
    any = true;
    if (c == '\n') return true;
    line.push_back(c);
    if (line.size() > 4096) throw ParseError("y4m: header line too long at byte " + std::to_string(offset));
  }
  if (any) throw ParseError("y4m: header line not terminated at byte " + std::to_string(offset));
  return false;
}

}  // namespace

Y4mReader::Y4mReader(std::istream& in) : in_(in) {
  std::string line;
  if (!read_line(in_, line, offset_) || line.rfind(kSignature, 0) != 0) {
    throw ParseError("y4m: missing YUV4MPEG2 signature at byte 0");
  }
  bool have_w = false, have_h = false, have_f = false;
  std::size_t pos = sizeof(kSignature) - 1;
  while (pos < line.size()) {
    if (line[pos] == ' ') {
      ++pos;
      continue;
    }
    const std::size_t end = std::min(line.find(' ', pos), line.size());
    const std::string token = line.substr(pos, end - pos);
    const std::uint64_t at = pos;
    const std::string value = token.substr(1);
    switch (token[0]) {
      case 'W':
        meta_.width = parse_int(value, at);
        have_w = true;
        break;
      case 'H':
        meta_.height = parse_int(value, at);
        have_h = true;
        break;
      case 'F': {
        const auto colon = value.find(':');
        if (colon == std::string::npos) throw ParseError("y4m: bad frame rate '" + token + "' at byte " + std::to_string(at));
        meta_.fps_num = parse_int(value.substr(0, colon), at);
        meta_.fps_den = parse_int(value.substr(colon + 1), at);
        have_f = true;
        break;
      }
      case 'C': {
        const auto fmt = parse_colorspace(value, at);
        meta_.chroma = fmt.chroma;
        meta_.bit_depth = fmt.bit_depth;
        break;
      }
      case 'I':
      case 'A':
      case 'X':
        break;
      default:
        throw ParseError("y4m: unknown header tag '" + token + "' at byte " + std::to_string(at));
    }
    pos = end;
  }
  if (!have_w || !have_h || meta_.width <= 0 || meta_.height <= 0) {
    throw ParseError("y4m: missing or invalid W/H tag at byte " + std::to_string(offset_ - 1));
  }
  if (!have_f || meta_.fps_num <= 0 || meta_.fps_den <= 0) {
    throw ParseError("y4m: missing or invalid F tag at byte " + std::to_string(offset_ - 1));
  }
  chroma_bytes_ = chroma_samples(meta_.chroma, meta_.width, meta_.height) * (meta_.bit_depth > 8 ? 2 : 1);
}

std::optional<Frame> Y4mReader::next() {
  std::string line;
  const std::uint64_t frame_start = offset_;
  if (!read_line(in_, line, offset_)) {
    meta_.frame_count = frames_read_;
    meta_.duration_s = static_cast<double>(frames_read_) * meta_.fps_den / meta_.fps_num;
    return std::nullopt;
  }
  if (line.rfind(kFrameMarker, 0) != 0) {
    throw ParseError("y4m: expected FRAME marker at byte " + std::to_string(frame_start));
  }

  Frame f(meta_.width, meta_.height, meta_.bit_depth);
  const std::size_t bytes_per_sample = meta_.bit_depth > 8 ? 2 : 1;
  std::vector<unsigned char> buf(f.luma.size() * bytes_per_sample);
  in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in_.gcount()) != buf.size()) {
    throw IoError("y4m: truncated luma plane in frame " + std::to_string(frames_read_));
  }
  offset_ += buf.size();
  const int max_v = f.max_value();
  for (std::size_t i = 0; i < f.luma.size(); ++i) {
    const unsigned v = bytes_per_sample == 1 ? buf[i] : buf[2 * i] | (static_cast<unsigned>(buf[2 * i + 1]) << 8);
    if (static_cast<int>(v) > max_v) {
      throw ParseError("y4m: sample exceeds bit depth in frame " + std::to_string(frames_read_) + " at byte " +
                       std::to_string(offset_ - buf.size() + i * bytes_per_sample));
    }
    f.luma[i] = static_cast<std::uint16_t>(v);
  }
  in_.ignore(static_cast<std::streamsize>(chroma_bytes_));
  if (static_cast<std::size_t>(in_.gcount()) != chroma_bytes_) {
    throw IoError("y4m: truncated chroma planes in frame " + std::to_string(frames_read_));
  }
  offset_ += chroma_bytes_;
  ++frames_read_;
  return f;
}

Y4mVideo read_y4m(std::istream& in) {
  Y4mReader reader(in);
  Y4mVideo video;
  while (auto f = reader.next()) video.frames.push_back(std::move(*f));
  video.meta = reader.meta();
  return video;
}

Y4mVideo read_y4m(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_y4m(in);
}

void write_y4m(std::ostream& out, const VideoMeta& meta, const std::vector<Frame>& frames) {
  out << kSignature << " W" << meta.width << " H" << meta.height << " F" << meta.fps_num << ':' << meta.fps_den
      << " Ip A1:1 C" << colorspace_tag(meta.chroma, meta.bit_depth) << '\n';
  const bool wide = meta.bit_depth > 8;
  const std::size_t n_chroma = chroma_samples(meta.chroma, meta.width, meta.height);
  const unsigned mid = 1u << (meta.bit_depth - 1);
  std::vector<char> chroma;
  for (std::size_t i = 0; i < n_chroma; ++i) {
    chroma.push_back(static_cast<char>(mid & 0xff));
    if (wide) chroma.push_back(static_cast<char>(mid >> 8));
  }
  for (const Frame& f : frames) {
    if (f.width != meta.width || f.height != meta.height) throw InvalidInput("write_y4m: frame size differs from header");
    out << kFrameMarker << '\n';
    for (std::uint16_t v : f.luma) {
      out.put(static_cast<char>(v & 0xff));
      if (wide) out.put(static_cast<char>(v >> 8));
    }
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
  }
  if (!out) throw IoError("write_y4m: stream write failed");
}

void write_y4m(const std::filesystem::path& path, const VideoMeta& meta, const std::vector<Frame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  write_y4m(out, meta, frames);
}

void write_pgm(std::ostream& out, const Frame& frame) {
  out << "P5\n" << frame.width << ' ' << frame.height << '\n' << frame.max_value() << '\n';
  for (std::uint16_t v : frame.luma) {
    if (frame.bit_depth > 8) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
  if (!out) throw IoError("write_pgm: stream write failed");
}

double lanczos5(double x) {
  constexpr double a = 5.0;
  if (x == 0.0) return 1.0;
  if (std::abs(x) >= a) return 0.0;
  if (x == std::round(x)) return 0.0;
  const double px = std::numbers::pi * x;
  return a * std::sin(px) * std::sin(px / a) / (px * px);
}

namespace {

struct Taps {
  std::vector<int> first;  // index of the first source sample per output sample
  std::vector<std::vector<double>> weights;
};

Taps compute_taps(int in_size, int out_size) {
  const double scale = static_cast<double>(in_size) / out_size;
  const double stretch = std::max(scale, 1.0);
  const double support = 5.0 * stretch;
  Taps taps;
  taps.first.resize(out_size);
  taps.weights.resize(out_size);
  for (int i = 0; i < out_size; ++i) {
    const double center = (i + 0.5) * scale - 0.5;
    const int lo = static_cast<int>(std::floor(center - support)) + 1;
    const int hi = static_cast<int>(std::ceil(center + support)) - 1;
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(hi - lo + 1));
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double v = lanczos5((j - center) / stretch);
      w.push_back(v);
      sum += v;
    }
    for (double& v : w) v /= sum;
    taps.first[i] = lo;
    taps.weights[i] = std::move(w);
  }
  return taps;
}

}  // namespace

Frame lanczos5_resize(const Frame& frame, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw InvalidInput("lanczos5_resize: output size must be at least 1x1");
  if (frame.width < 1 || frame.height < 1) throw InvalidInput("lanczos5_resize: empty input frame");
  const int in_w = frame.width;
  const int in_h = frame.height;
  const Taps tx = compute_taps(in_w, out_w);
  const Taps ty = compute_taps(in_h, out_h);

  // Horizontal pass: in_h rows x out_w columns.
  std::vector<double> tmp(static_cast<std::size_t>(in_h) * out_w);
  for (int y = 0; y < in_h; ++y) {
    const std::uint16_t* row = frame.luma.data() + static_cast<std::size_t>(y) * in_w;
    for (int x = 0; x < out_w; ++x) {
      const auto& w = tx.weights[x];
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        const int src = std::clamp(tx.first[x] + static_cast<int>(k), 0, in_w - 1);
        acc += w[k] * row[src];
      }
      tmp[static_cast<std::size_t>(y) * out_w + x] = acc;
    }
  }

  Frame out(out_w, out_h, frame.bit_depth);
  const double max_v = frame.max_value();
  for (int y = 0; y < out_h; ++y) {
    const auto& w = ty.weights[y];
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        const int src = std::clamp(ty.first[y] + static_cast<int>(k), 0, in_h - 1);
        acc += w[k] * tmp[static_cast<std::size_t>(src) * out_w + x];
      }
      out.at(x, y) = static_cast<std::uint16_t>(std::clamp(std::round(acc), 0.0, max_v));
    }
  }
  return out;
}

}  // namespace litevp
