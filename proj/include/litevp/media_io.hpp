#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace litevp {

/// Planar luma of one picture, row-major. Samples are < 2^bit_depth.
struct Frame {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> luma;

  Frame() = default;
  Frame(int w, int h, int depth, std::uint16_t fill = 0)
      : width(w), height(h), bit_depth(depth), luma(static_cast<std::size_t>(w) * h, fill) {}

  std::uint16_t at(int x, int y) const { return luma[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t& at(int x, int y) { return luma[static_cast<std::size_t>(y) * width + x]; }
  int max_value() const { return (1 << bit_depth) - 1; }
};

enum class Chroma { k420, k422, k444, kMono };

struct VideoMeta {
  int width = 0;
  int height = 0;
  int fps_num = 0;
  int fps_den = 1;
  int bit_depth = 8;
  Chroma chroma = Chroma::k420;
  double duration_s = 0.0;
  int frame_count = 0;

  double fps() const { return static_cast<double>(fps_num) / fps_den; }
};

/// Streaming YUV4MPEG2 reader. Only the luma plane of each frame is kept.
///
/// Header problems raise ParseError with the byte offset of the offending
/// token; a frame cut short raises IoError naming the frame index.
class Y4mReader {
 public:
  explicit Y4mReader(std::istream& in);

  /// Header fields; frame_count/duration_s are filled once the stream is drained.
  const VideoMeta& meta() const { return meta_; }

  std::optional<Frame> next();

 private:
  std::istream& in_;
  VideoMeta meta_;
  std::size_t chroma_bytes_ = 0;
  std::uint64_t offset_ = 0;
  int frames_read_ = 0;
};

struct Y4mVideo {
  VideoMeta meta;
  std::vector<Frame> frames;
};

Y4mVideo read_y4m(std::istream& in);
Y4mVideo read_y4m(const std::filesystem::path& path);

/// Writes luma as given and neutral mid-grey chroma for the declared subsampling.
void write_y4m(std::ostream& out, const VideoMeta& meta, const std::vector<Frame>& frames);
void write_y4m(const std::filesystem::path& path, const VideoMeta& meta, const std::vector<Frame>& frames);

/// Binary PGM (P5). Depths above 8 bits are written as 16-bit big-endian samples.
void write_pgm(std::ostream& out, const Frame& frame);

/// Lanczos window a=5: sinc(x) * sinc(x/5) for |x| < 5, else 0.
double lanczos5(double x);

/// Separable Lanczos-5 resampling with clamp-to-edge borders. When shrinking,
/// the kernel is stretched by the scale factor. Taps are normalised per output
/// sample; accumulation is in double and the result is rounded and clamped.
Frame lanczos5_resize(const Frame& frame, int out_w, int out_h);

inline constexpr int kAnalysisWidth = 480;
inline constexpr int kAnalysisHeight = 270;

}  // namespace litevp
