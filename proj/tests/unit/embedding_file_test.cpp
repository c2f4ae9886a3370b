#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "litevp/embedding_file.hpp"
#include "litevp/error.hpp"
#include "litevp/rng.hpp"

using namespace litevp;

namespace {

const std::filesystem::path kFixture = std::filesystem::path(LITEVP_FIXTURE_DIR) / "embed_valid.lvpe";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "litevp_embedding_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Embedding, ReadsFixtureWrittenByPython) {
  const ClipEmbedding e = read_embedding(kFixture);
  for (int i = 0; i < kClipFrames * kClipDim; ++i) {
    const float want = static_cast<float>(std::sin(0.37 * i) * (1 + i / 512));
    ASSERT_EQ(e.values[i], want) << i;
  }
  EXPECT_TRUE(validate_embedding(kFixture).ok);
}

TEST(Embedding, WriterMatchesFixtureBytes) {
  std::ostringstream out;
  write_embedding(out, read_embedding(kFixture));
  EXPECT_EQ(out.str(), slurp(kFixture));
}

TEST(Embedding, RandomPayloadRoundTrip) {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    ClipEmbedding e;
    for (auto& v : e.values) v = static_cast<float>(rng.normal() * 3.0);
    std::stringstream buf;
    write_embedding(buf, e);
    EXPECT_EQ(read_embedding(buf).values, e.values);
  }
}

TEST(Embedding, TruncatedPayloadIsReported) {
  const std::string bytes = slurp(kFixture);
  const auto path = scratch("truncated.lvpe");
  std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() - 7);
  const auto check = validate_embedding(path);
  EXPECT_FALSE(check.ok);
  EXPECT_NE(check.message.find("payload length"), std::string::npos) << check.message;

  std::istringstream in(bytes.substr(0, bytes.size() - 7));
  EXPECT_THROW(read_embedding(in), FormatError);
  std::istringstream extra(bytes + "x");
  EXPECT_THROW(read_embedding(extra), FormatError);
}

TEST(Embedding, NanNamesRowAndColumn) {
  std::string bytes = slurp(kFixture);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 16 + 4 * (3 * 512 + 77), &nan, 4);
  const auto path = scratch("nan.lvpe");
  std::ofstream(path, std::ios::binary) << bytes;
  const auto check = validate_embedding(path);
  EXPECT_FALSE(check.ok);
  EXPECT_NE(check.message.find("non-finite at (3, 77)"), std::string::npos) << check.message;
}

TEST(Embedding, HeaderViolations) {
  std::string bytes = slurp(kFixture);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  EXPECT_THROW(read_embedding(a), FormatError);

  std::string bad_version = bytes;
  bad_version[4] = 2;
  std::istringstream b(bad_version);
  EXPECT_THROW(read_embedding(b), VersionError);

  std::string bad_dim = bytes;
  bad_dim[13] = 1;  // dim 512 -> 256
  std::istringstream c(bad_dim);
  EXPECT_THROW(read_embedding(c), FormatError);

  std::istringstream empty("");
  EXPECT_THROW(read_embedding(empty), FormatError);
  EXPECT_FALSE(validate_embedding(scratch("does_not_exist.lvpe")).ok);
}
