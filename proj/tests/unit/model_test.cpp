#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "litevp/error.hpp"
#include "litevp/model.hpp"
#include "support/model_support.hpp"
#include "support/scalar_forward.hpp"

using namespace litevp;

namespace {

constexpr double kGradTol = 1e-6;

Architecture tiny_arch() {
  Architecture a;
  a.tokens = 3;
  a.clip_dim = 6;
  a.clip_out = 4;
  a.input = 12;
  a.hidden1 = 8;
  a.hidden2 = 4;
  a.hidden3 = 5;
  a.outputs = 8;
  return a;
}

std::vector<TrainSample> random_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(modelsupport::random_sample(rng, "v" + std::to_string(i)));
  return out;
}

std::string bytes_of(const ModelCheckpoint& ck) {
  std::ostringstream os;
  save_checkpoint(os, ck);
  return os.str();
}

ModelCheckpoint from_bytes(const std::string& s) {
  std::istringstream is(s);
  return load_checkpoint(is);
}

ModelCheckpoint small_checkpoint(std::uint64_t seed = 3) {
  ModelCheckpoint ck;
  ck.model = LiteVpModel(tiny_arch());
  ck.model.init(seed);
  ck.model.round_to_float();
  std::vector<std::vector<double>> rows = {std::vector<double>(kScaledDims, 0.0),
                                           std::vector<double>(kScaledDims, 1.0)};
  rows[1][3] = 0.1;
  ck.scaler = Scaler::fit(rows);
  ck.mask = GroupMask::parse("FVAC");
  ck.history = {{1, 0.5, 0.4, 0.3, 0.1, 1e-4}, {2, 0.25, 0.2, 0.15, 0.05, 5e-5}};
  ck.best_epoch = 2;
  return ck;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Architecture, ParameterAudit) {
  LiteVpModel m;
  EXPECT_EQ(m.head_param_count(), 244104u);
  EXPECT_EQ(m.clip_param_count(), 796176u);
  EXPECT_GE(m.head_param_count(), 235000u);
  EXPECT_LE(m.head_param_count(), 250000u);
  EXPECT_GE(m.clip_param_count(), 790000u);
  EXPECT_LE(m.clip_param_count(), 805000u);

  using Shape = std::pair<std::size_t, std::size_t>;
  std::map<std::string, Shape> shape;
  for (Param* p : m.params()) shape[p->name] = {p->value.rows, p->value.cols};
  EXPECT_EQ(shape["head.fc1.weight"], Shape(754, 256));
  EXPECT_EQ(shape["head.fc2.weight"], Shape(256, 128));
  EXPECT_EQ(shape["head.fc3.weight"], Shape(128, 64));
  EXPECT_EQ(shape["head.skip3.weight"], Shape(128, 64));
  EXPECT_EQ(shape["head.out.weight"], Shape(64, 8));
  EXPECT_EQ(shape["clip.query.weight"], Shape(512, 512));
  EXPECT_EQ(shape["clip.proj.weight"], Shape(512, 16));
  EXPECT_EQ(m.arch().clip_offset(), group_span(Group::kClip).offset);
}

TEST(Architecture, RejectsBadWidths) {
  Architecture a;
  a.hidden2 = 100;
  EXPECT_THROW(LiteVpModel{a}, InvalidInput);
}

TEST(Forward, ZeroHeadGivesHalf) {
  LiteVpModel m;
  m.init(1);
  for (Param* p : m.head_params()) p->value.fill(p->name.ends_with("running_var") ? 1.0 : 0.0);
  const Tensor2 y = m.predict(Tensor2(3, kFeatureDim), Tensor2(3, kClipFrames * kClipDim), true);
  for (double v : y.data) EXPECT_EQ(v, 0.5);

  ModelCheckpoint ck;
  ck.model = m;
  ck.scaler = Scaler(std::vector<double>(kScaledDims, 0.0), std::vector<double>(kScaledDims, 1.0));
  Rng rng(2);
  const RawFeatures raw = modelsupport::random_raw(rng);
  const ClipEmbedding emb = modelsupport::random_embedding(rng);
  const Prediction p = predict_one(ck, raw, &emb);
  for (std::size_t k = 0; k < kNumTargets; ++k) EXPECT_EQ(p.qp[k], 127.5);
}

TEST(Forward, MaskedClipIgnoresEmbedding) {
  Rng rng(5);
  ModelCheckpoint ck;
  ck.model.init(9);
  ck.scaler = Scaler(std::vector<double>(kScaledDims, 0.0), std::vector<double>(kScaledDims, 100.0));
  ck.mask = GroupMask::parse("FVMA");
  const RawFeatures raw = modelsupport::random_raw(rng);
  const ClipEmbedding e1 = modelsupport::random_embedding(rng), e2 = modelsupport::random_embedding(rng);
  const auto a = predict_one(ck, raw, &e1), b = predict_one(ck, raw, &e2), c = predict_one(ck, raw, nullptr);
  EXPECT_EQ(a.qp, b.qp);
  EXPECT_EQ(a.qp, c.qp);

  // Same as the model run directly with a zero slot.
  const FeatureVector fv = model_input(raw, ck.scaler, ck.mask);
  Tensor2 x(1, kFeatureDim);
  std::copy(fv.values.begin(), fv.values.end(), x.data.begin());
  const Tensor2 y = ck.model.predict(x, {}, false);
  for (std::size_t k = 0; k < kNumTargets; ++k) EXPECT_EQ(a.qp_norm[k], y(0, k));
}

TEST(Forward, MissingEmbeddingIsRejected) {
  Rng rng(5);
  ModelCheckpoint ck;
  ck.model.init(1);
  ck.scaler = Scaler(std::vector<double>(kScaledDims, 0.0), std::vector<double>(kScaledDims, 1.0));
  const RawFeatures raw = modelsupport::random_raw(rng);
  EXPECT_THROW(predict_one(ck, raw, nullptr), InvalidInput);
}

TEST(Forward, BatchSizeInvariantAndPure) {
  Rng rng(11);
  LiteVpModel m;
  m.init(4);
  for (Param* p : m.head_params()) {
    if (p->name.ends_with("running_mean"))
      for (auto& v : p->value.data) v = rng.uniform(-0.1, 0.1);
    if (p->name.ends_with("running_var"))
      for (auto& v : p->value.data) v = rng.uniform(0.5, 2.0);
  }
  const std::size_t n = 7;
  const Tensor2 x = modelsupport::random_tensor(rng, n, kFeatureDim, 1.0);
  const Tensor2 emb = modelsupport::random_tensor(rng, n, kClipFrames * kClipDim, 0.1);
  std::vector<std::vector<double>> before;
  for (Param* p : m.params()) before.push_back(p->value.data);

  const Tensor2 all = m.predict(x, emb, true);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor2 xi(1, kFeatureDim), ei(1, emb.cols);
    std::copy_n(x.row(i), kFeatureDim, xi.data.begin());
    std::copy_n(emb.row(i), emb.cols, ei.data.begin());
    const Tensor2 yi = m.predict(xi, ei, true);
    EXPECT_EQ(std::memcmp(yi.data.data(), all.row(i), kNumTargets * sizeof(double)), 0) << "row " << i;
  }
  const auto ps = m.params();
  for (std::size_t t = 0; t < ps.size(); ++t) EXPECT_EQ(ps[t]->value.data, before[t]) << ps[t]->name;
}

TEST(Gradients, ComposedModelAllParametersSmallWidths) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = modelsupport::composed_gradcheck(tiny_arch(), seed, 100000);
    EXPECT_LE(r.max_rel_err, kGradTol) << "seed " << seed << " worst " << r.worst;
    EXPECT_LE(r.zero_max_analytic, modelsupport::kZeroAnalyticBound) << "seed " << seed;
    EXPECT_LE(r.zero_max_fd, modelsupport::kZeroFdBound) << "seed " << seed;
    EXPECT_GT(r.checked, 400u);
    // key/value/proj biases of ClipNet and the three pre-batchnorm biases
    EXPECT_EQ(r.zero_checked, 6u + 6u + 4u + 8u + 4u + 5u);
  }
}

// Without the VMAF term the loss has no large-magnitude rounding, so the
// default 1e-3 floor applies.
TEST(Gradients, ComposedModelWithoutVmafTermTightFloor) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = modelsupport::composed_gradcheck(tiny_arch(), seed, 100000, 4, 0.0, 1e-3);
    EXPECT_LE(r.max_rel_err, kGradTol) << "seed " << seed << " worst " << r.worst;
  }
}

TEST(Gradients, ComposedModelProductionWidthsSampled) {
  const auto r = modelsupport::composed_gradcheck(Architecture{}, 21, 2, 3);
  EXPECT_LE(r.max_rel_err, kGradTol) << r.worst;
  EXPECT_LE(r.zero_max_analytic, modelsupport::kZeroAnalyticBound);
  EXPECT_LE(r.zero_max_fd, modelsupport::kZeroFdBound);
  EXPECT_GT(r.clip_grad_norm, 0.0);
}

TEST(Gradients, ReachClipNetOnlyWhenEnabled) {
  Rng rng(8);
  const Architecture a = tiny_arch();
  LiteVpModel m(a);
  m.init(2);
  const Tensor2 x = modelsupport::random_tensor(rng, 4, a.input, 1.0);
  const Tensor2 emb = modelsupport::random_tensor(rng, 4, a.tokens * a.clip_dim, 1.0);
  const Tensor2 dy = modelsupport::random_tensor(rng, 4, a.outputs, 1.0);

  for (bool use_clip : {true, false}) {
    for (Param* p : m.params()) p->zero_grad();
    ModelTrace t;
    Rng drop(1);
    m.forward_train(x, emb, use_clip, 0.0, drop, t);
    const Tensor2 dx = m.backward(t, dy);
    double norm = 0.0;
    for (Param* p : m.clip_params())
      for (double g : p->grad.data) norm += g * g;
    if (use_clip) {
      EXPECT_GT(norm, 0.0);
    } else {
      EXPECT_EQ(norm, 0.0);
      for (std::size_t r = 0; r < dx.rows; ++r)
        for (std::size_t j = a.clip_offset(); j < a.input; ++j) EXPECT_EQ(dx(r, j), 0.0);
    }
  }
}

TEST(Training, SeedFixedRunIsBitwiseReproducible) {
  const auto samples = random_samples(24, 77);
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.batch_size = 8;
  cfg.seed = 5;
  const auto a = train(samples, cfg, GroupMask{});
  const auto b = train(samples, cfg, GroupMask{});
  EXPECT_EQ(a.history.size(), 10u);
  EXPECT_EQ(bytes_of(a), bytes_of(b));

  cfg.seed = 6;
  EXPECT_NE(bytes_of(train(samples, cfg, GroupMask{})), bytes_of(a));
}

TEST(Training, KeepsBestValidationEpoch) {
  const auto samples = random_samples(30, 78);
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.learning_rate = 1e-3;
  std::vector<EpochLog> seen;
  const auto ck = train(samples, cfg, GroupMask::parse("FVMA"), [&](const EpochLog& e) { seen.push_back(e); });
  ASSERT_EQ(seen.size(), 6u);
  std::size_t best = 0;
  for (std::size_t i = 1; i < seen.size(); ++i)
    if (seen[i].val_loss < seen[best].val_loss) best = i;
  EXPECT_EQ(ck.best_epoch, seen[best].epoch);
  for (const auto& e : seen) {
    EXPECT_NEAR(e.val_loss, e.val_l_a + e.val_l_b, 1e-12);
    EXPECT_TRUE(std::isfinite(e.train_loss));
  }
}

TEST(Training, SingleSampleIsMemorized) {
  const auto samples = random_samples(1, 79);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  cfg.learning_rate = 1e-3;
  cfg.dropout = 0.0;
  cfg.l2 = 0.0;
  // A one-video batch has zero variance, so eval-mode batchnorm divides
  // running-mean lag by sqrt(eps) and the validation loss is erratic; keep
  // the rate fixed.
  cfg.scheduler.patience = 100000;
  const auto ck = train(samples, cfg, GroupMask{});
  const EpochLog& last = ck.history.back();
  EXPECT_LT(last.train_loss, 1e-3) << "epochs " << ck.history.size();
  EXPECT_EQ(last.val_l_b, 0.0);

  const Prediction p = predict_one(ck, samples[0].raw, &*samples[0].embedding);
  for (std::size_t k = 0; k < kNumTargets; ++k) EXPECT_NEAR(p.qp[k], samples[0].target_qp[k], 1.0);
}

TEST(Training, EmptyAndMissingInputsAreRejected) {
  EXPECT_THROW(train({}, TrainConfig{}, GroupMask{}), InvalidInput);
  auto samples = random_samples(3, 80);
  samples[1].embedding.reset();
  EXPECT_THROW(train(samples, TrainConfig{}, GroupMask{}), InvalidInput);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  EXPECT_NO_THROW(train(samples, cfg, GroupMask::parse("FVMA")));
}

TEST(Training, NonFiniteInputAborts) {
  auto samples = random_samples(4, 81);
  samples[2].embedding->values[17] = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg;
  cfg.max_epochs = 2;
  EXPECT_THROW(train(samples, cfg, GroupMask{}), NumericError);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const ModelCheckpoint ck = small_checkpoint();
  const std::string bytes = bytes_of(ck);
  ModelCheckpoint back = from_bytes(bytes);
  EXPECT_EQ(back.model.arch(), ck.model.arch());
  const auto pa = ck.model.params();
  const auto pb = back.model.params();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ASSERT_EQ(pa[i]->value.size(), pb[i]->value.size());
    EXPECT_EQ(std::memcmp(pa[i]->value.data.data(), pb[i]->value.data.data(), pa[i]->value.size() * sizeof(double)), 0)
        << pa[i]->name;
  }
  EXPECT_EQ(back.scaler.min(), ck.scaler.min());
  EXPECT_EQ(back.scaler.max(), ck.scaler.max());
  EXPECT_EQ(back.mask, ck.mask);
  EXPECT_EQ(back.config.to_json(), ck.config.to_json());
  ASSERT_EQ(back.history.size(), 2u);
  EXPECT_EQ(back.history[1].lr, 5e-5);
  EXPECT_EQ(back.best_epoch, 2);
  EXPECT_EQ(bytes_of(back), bytes);
}

TEST(Checkpoint, LittleEndianBlob) {
  ModelCheckpoint ck = small_checkpoint();
  ck.model.params()[0]->value.data[0] = 1.0;
  ck.model.params()[0]->value.data[1] = -2.5;
  const std::string bytes = bytes_of(ck);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t hlen = p[8] | p[9] << 8 | p[10] << 16 | p[11] << 24;
  const unsigned char one[4] = {0x00, 0x00, 0x80, 0x3f};
  const unsigned char m25[4] = {0x00, 0x00, 0x20, 0xc0};
  EXPECT_EQ(std::memcmp(p + 12 + hlen, one, 4), 0);
  EXPECT_EQ(std::memcmp(p + 16 + hlen, m25, 4), 0);
  EXPECT_EQ(std::memcmp(p, "LVPN\x01\x00\x00\x00", 8), 0);
}

TEST(Checkpoint, CorruptionIsRejected) {
  const std::string good = bytes_of(small_checkpoint());
  for (std::size_t len : {std::size_t{0}, std::size_t{5}, std::size_t{11}, std::size_t{40}, good.size() - 1,
                          good.size() - 5}) {
    EXPECT_THROW(from_bytes(good.substr(0, len)), FormatError) << "length " << len;
  }
  EXPECT_THROW(from_bytes(good + "x"), FormatError);

  std::string flipped = good;
  flipped[flipped.size() - 20] ^= 0x10;
  EXPECT_THROW(from_bytes(flipped), FormatError);

  std::string crc = good;
  crc.back() ^= 0x01;
  EXPECT_THROW(from_bytes(crc), FormatError);

  std::string magic = good;
  magic[0] = 'X';
  EXPECT_THROW(from_bytes(magic), FormatError);

  std::string version = good;
  version[4] = 2;
  EXPECT_THROW(from_bytes(version), VersionError);

  EXPECT_THROW(load_checkpoint(std::filesystem::path("/nonexistent/model.lvpn")), IoError);
}

TEST(Checkpoint, HeaderMismatchesAreRejected) {
  const std::string good = bytes_of(small_checkpoint());
  const auto* p = reinterpret_cast<const unsigned char*>(good.data());
  const std::size_t hlen = p[8] | p[9] << 8 | p[10] << 16 | p[11] << 24;
  const nlohmann::json header = nlohmann::json::parse(good.substr(12, hlen));
  auto rebuild = [&](const nlohmann::json& h) {
    const std::string text = h.dump();
    std::string out = good.substr(0, 8);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
    return out + text + good.substr(12 + hlen);
  };
  EXPECT_NO_THROW(from_bytes(rebuild(header)));

  auto h = header;
  h["layout_version"] = 2;
  EXPECT_THROW(from_bytes(rebuild(h)), VersionError);

  h = header;
  h["architecture"]["hidden3"] = 6;
  EXPECT_THROW(from_bytes(rebuild(h)), FormatError);

  h = header;
  h["params"][0]["name"] = "renamed";
  EXPECT_THROW(from_bytes(rebuild(h)), FormatError);

  h = header;
  h.erase("scaler");
  EXPECT_THROW(from_bytes(rebuild(h)), FormatError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "litevp_model_test.lvpn";
  const ModelCheckpoint ck = small_checkpoint(12);
  save_checkpoint(path, ck);
  EXPECT_EQ(bytes_of(load_checkpoint(path)), bytes_of(ck));
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}

TEST(Golden, FixtureCheckpointReproducesStoredOutputs) {
  const std::string dir = LITEVP_FIXTURE_DIR;
  const ModelCheckpoint ck = load_checkpoint(std::filesystem::path(dir + "/golden_model.lvpn"));
  const nlohmann::json expect = nlohmann::json::parse(slurp(dir + "/golden_output.json"));
  const nlohmann::json inputs = nlohmann::json::parse(slurp(dir + "/golden_input.json"));
  const scalarfwd::Weights w = scalarfwd::parse(slurp(dir + "/golden_model.lvpn"));
  ASSERT_EQ(expect.at("format_version").get<int>(), static_cast<int>(kCheckpointFormatVersion));

  const auto& videos = inputs.at("videos");
  ASSERT_EQ(videos.size(), expect.at("outputs").size());
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const RawFeatures raw = RawFeatures::from_json(videos[i].at("features"));
    const ClipEmbedding emb = read_embedding(std::filesystem::path(dir + "/" + videos[i].at("embedding").get<std::string>()));
    const Prediction p = predict_one(ck, raw, &emb);

    const FeatureVector fv = model_input(raw, ck.scaler, ck.mask);
    const std::vector<double> x(fv.values.begin(), fv.values.end());
    const std::vector<double> e(emb.values.begin(), emb.values.end());
    const auto oracle = scalarfwd::forward(w, x, e, ck.mask.enabled(Group::kClip));

    const auto stored = expect.at("outputs")[i].get<std::vector<double>>();
    for (std::size_t k = 0; k < kNumTargets; ++k) {
      EXPECT_NEAR(p.qp_norm[k], stored[k], 1e-12) << "video " << i << " target " << k;
      EXPECT_NEAR(oracle[k], stored[k], 1e-9) << "video " << i << " target " << k;
    }
  }
}
