#include "litevp/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include <zlib.h>

#include "litevp/error.hpp"
#include "litevp/loss.hpp"
#include "litevp/optim.hpp"

namespace litevp {

using nlohmann::json;

void Architecture::validate() const {
  if (tokens == 0 || clip_dim == 0 || clip_out == 0 || input == 0 || hidden1 == 0 || hidden3 == 0 || outputs == 0)
    throw InvalidInput("architecture: zero width");
  if (clip_out > input) throw InvalidInput("architecture: clip output wider than the head input");
  if (hidden1 != 2 * hidden2) throw InvalidInput("architecture: hidden2 must be hidden1 / 2");
}

namespace {

const Architecture& checked(const Architecture& a) {
  a.validate();
  return a;
}

}  // namespace

LiteVpModel::LiteVpModel(const Architecture& arch)
    : arch_(checked(arch)),
      clip_(arch.tokens, arch.clip_dim, arch.clip_out, "clip"),
      d1_(arch.input, arch.hidden1, "head.fc1"),
      d2_(arch.hidden1, arch.hidden2, "head.fc2"),
      d3_(arch.hidden2, arch.hidden3, "head.fc3"),
      skip3_(arch.hidden2, arch.hidden3, "head.skip3"),
      d4_(arch.hidden3, arch.outputs, "head.out"),
      bn1_(arch.hidden1, "head.bn1"),
      bn2_(arch.hidden2, "head.bn2"),
      bn3_(arch.hidden3, "head.bn3") {}

void LiteVpModel::init(std::uint64_t seed) {
  Rng rng(seed);
  clip_.init(rng);
  for (Dense* d : {&d1_, &d2_, &d3_, &skip3_, &d4_}) d->init(rng);
  for (BatchNorm* bn : {&bn1_, &bn2_, &bn3_}) {
    bn->gamma().value.fill(1.0);
    bn->beta().value.fill(0.0);
    bn->running_mean().value.fill(0.0);
    bn->running_var().value.fill(1.0);
  }
}

std::vector<Param*> LiteVpModel::head_params() {
  std::vector<Param*> out;
  auto add = [&](std::vector<Param*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  add(d1_.params());
  add(bn1_.params());
  add(d2_.params());
  add(bn2_.params());
  add(d3_.params());
  add(bn3_.params());
  add(skip3_.params());
  add(d4_.params());
  return out;
}

std::vector<Param*> LiteVpModel::params() {
  std::vector<Param*> out = clip_params();
  for (Param* p : head_params()) out.push_back(p);
  return out;
}

std::vector<const Param*> LiteVpModel::params() const {
  auto ps = const_cast<LiteVpModel*>(this)->params();
  return {ps.begin(), ps.end()};
}

void LiteVpModel::round_to_float() {
  for (Param* p : params())
    for (auto& v : p->value.data) v = static_cast<double>(static_cast<float>(v));
}

Tensor2 LiteVpModel::embed_input(const Tensor2& x, const Tensor2& clip_out, bool use_clip) const {
  if (x.cols != arch_.input)
    throw InternalError("model: input has " + std::to_string(x.cols) + " cols, expected " +
                        std::to_string(arch_.input));
  Tensor2 x0 = x;
  const std::size_t off = arch_.clip_offset();
  for (std::size_t r = 0; r < x0.rows; ++r)
    for (std::size_t j = 0; j < arch_.clip_out; ++j) x0(r, off + j) = use_clip ? clip_out(r, j) : 0.0;
  return x0;
}

namespace {

void check_embeddings(const Tensor2& x, const Tensor2& emb, const Architecture& a) {
  if (emb.rows != x.rows || emb.cols != a.tokens * a.clip_dim)
    throw InvalidInput("model: embeddings are " + std::to_string(emb.rows) + "x" + std::to_string(emb.cols) +
                       ", expected " + std::to_string(x.rows) + "x" + std::to_string(a.tokens * a.clip_dim));
}

Tensor2 add(Tensor2 a, const Tensor2& b) {
  add_inplace(a, b);
  return a;
}

}  // namespace

Tensor2 LiteVpModel::predict(const Tensor2& x, const Tensor2& emb, bool use_clip) const {
  Tensor2 c;
  if (use_clip) {
    check_embeddings(x, emb, arch_);
    c = clip_.forward(emb);
  }
  const Tensor2 x0 = embed_input(x, c, use_clip);
  const Tensor2 h1 = gelu(bn1_.forward_eval(d1_.forward(x0)));
  const Tensor2 h2 = gelu(add(bn2_.forward_eval(d2_.forward(h1)), pair_average(h1)));
  const Tensor2 h3 = gelu(add(bn3_.forward_eval(d3_.forward(h2)), skip3_.forward(h2)));
  Tensor2 y = sigmoid(d4_.forward(h3));
  check_finite(y, "model output");
  return y;
}

Tensor2 LiteVpModel::forward_train(const Tensor2& x, const Tensor2& emb, bool use_clip, double dropout_rate, Rng& rng,
                                   ModelTrace& t) {
  t.use_clip = use_clip;
  Tensor2 c;
  if (use_clip) {
    check_embeddings(x, emb, arch_);
    c = clip_.forward_train(emb, t.clip);
  }
  t.x0 = embed_input(x, c, use_clip);

  auto drop = [&](const Tensor2& a, Tensor2& m) {
    Tensor2 g = gelu(a);
    if (dropout_rate <= 0.0) {
      m = Tensor2();
      return g;
    }
    m = dropout_mask(g.rows, g.cols, dropout_rate, rng);
    return hadamard(g, m);
  };

  t.a1 = bn1_.forward_train(d1_.forward(t.x0), t.bn1);
  t.h1 = drop(t.a1, t.m1);
  t.a2 = add(bn2_.forward_train(d2_.forward(t.h1), t.bn2), pair_average(t.h1));
  t.h2 = drop(t.a2, t.m2);
  t.a3 = add(bn3_.forward_train(d3_.forward(t.h2), t.bn3), skip3_.forward(t.h2));
  t.h3 = drop(t.a3, t.m3);
  t.y = sigmoid(d4_.forward(t.h3));
  check_finite(t.y, "model output");
  return t.y;
}

Tensor2 LiteVpModel::backward(const ModelTrace& t, const Tensor2& dy) {
  auto undrop = [](const Tensor2& a, const Tensor2& m, const Tensor2& dh) {
    return gelu_backward(a, m.size() == 0 ? dh : hadamard(dh, m));
  };

  const Tensor2 dh3 = d4_.backward(t.h3, sigmoid_backward(t.y, dy));
  const Tensor2 da3 = undrop(t.a3, t.m3, dh3);
  const Tensor2 dh2 = add(d3_.backward(t.h2, bn3_.backward(t.bn3, da3)), skip3_.backward(t.h2, da3));
  const Tensor2 da2 = undrop(t.a2, t.m2, dh2);
  const Tensor2 dh1 = add(d2_.backward(t.h1, bn2_.backward(t.bn2, da2)), pair_average_backward(da2));
  const Tensor2 da1 = undrop(t.a1, t.m1, dh1);
  Tensor2 dx = d1_.backward(t.x0, bn1_.backward(t.bn1, da1));

  const std::size_t off = arch_.clip_offset();
  if (t.use_clip) {
    Tensor2 dc(dx.rows, arch_.clip_out);
    for (std::size_t r = 0; r < dx.rows; ++r)
      for (std::size_t j = 0; j < arch_.clip_out; ++j) dc(r, j) = dx(r, off + j);
    clip_.backward(t.clip, dc, false);
  } else {
    for (std::size_t r = 0; r < dx.rows; ++r)
      for (std::size_t j = 0; j < arch_.clip_out; ++j) dx(r, off + j) = 0.0;
  }
  return dx;
}

// ---- inference ----

FeatureVector model_input(const RawFeatures& raw, const Scaler& scaler, const GroupMask& mask) {
  const std::array<double, 16> zero{};
  return assemble(raw, zero, scaler, mask);
}

std::vector<Prediction> predict(const ModelCheckpoint& ckpt, std::span<const RawFeatures* const> raws,
                                std::span<const ClipEmbedding* const> embeddings) {
  const Architecture& a = ckpt.model.arch();
  if (a.input != kFeatureDim || a.tokens != kClipFrames || a.clip_dim != kClipDim || a.outputs != kNumTargets)
    throw InternalError("predict: checkpoint architecture does not match the feature layout");
  if (embeddings.size() != raws.size()) throw InternalError("predict: embeddings and features differ in count");
  const bool use_clip = ckpt.mask.enabled(Group::kClip);
  const std::size_t n = raws.size();

  Tensor2 x(n, kFeatureDim);
  Tensor2 emb(use_clip ? n : 0, use_clip ? kClipFrames * kClipDim : 0);
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureVector fv = model_input(*raws[i], ckpt.scaler, ckpt.mask);
    std::copy(fv.values.begin(), fv.values.end(), x.row(i));
    if (use_clip) {
      if (embeddings[i] == nullptr)
        throw InvalidInput("predict: video " + std::to_string(i) + " has no clip embedding but the C group is enabled");
      std::copy(embeddings[i]->values.begin(), embeddings[i]->values.end(), emb.row(i));
    }
  }
  const Tensor2 y = ckpt.model.predict(x, emb, use_clip);
  std::vector<Prediction> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < kNumTargets; ++k) {
      out[i].qp_norm[k] = y(i, k);
      out[i].qp[k] = 255.0 * y(i, k);
    }
  }
  return out;
}

Prediction predict_one(const ModelCheckpoint& ckpt, const RawFeatures& raw, const ClipEmbedding* embedding) {
  const RawFeatures* r[] = {&raw};
  const ClipEmbedding* e[] = {embedding};
  return predict(ckpt, r, e).front();
}

// ---- training ----

namespace {

struct Prepared {
  Tensor2 x, emb, target;
  std::vector<const RdCurve*> curves;
};

Prepared prepare(std::span<const TrainSample> samples, const Scaler& scaler, const GroupMask& mask,
                 const Architecture& arch) {
  const bool use_clip = mask.enabled(Group::kClip);
  const std::size_t n = samples.size();
  Prepared p;
  p.x = Tensor2(n, kFeatureDim);
  p.emb = Tensor2(use_clip ? n : 0, arch.tokens * arch.clip_dim);
  p.target = Tensor2(n, kNumTargets);
  for (std::size_t i = 0; i < n; ++i) {
    const TrainSample& s = samples[i];
    const FeatureVector fv = model_input(s.raw, scaler, mask);
    std::copy(fv.values.begin(), fv.values.end(), p.x.row(i));
    if (use_clip) {
      if (!s.embedding) throw InvalidInput("train: " + s.id + " has no clip embedding but the C group is enabled");
      std::copy(s.embedding->values.begin(), s.embedding->values.end(), p.emb.row(i));
    }
    if (!s.curve.fitted()) throw InvalidInput("train: " + s.id + " has no fitted RD curve");
    for (std::size_t k = 0; k < kNumTargets; ++k) {
      if (!(s.target_qp[k] >= 0.0 && s.target_qp[k] <= 255.0))
        throw InvalidInput("train: " + s.id + " target QP out of range");
      p.target(i, k) = s.target_qp[k] / 255.0;
    }
    p.curves.push_back(&s.curve);
  }
  return p;
}

Tensor2 gather(const Tensor2& t, std::span<const std::size_t> rows) {
  Tensor2 out(rows.size(), t.cols);
  if (t.rows == 0) return out;
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(t.row(rows[i]), t.cols, out.row(i));
  return out;
}

std::vector<const RdCurve*> gather(const std::vector<const RdCurve*>& c, std::span<const std::size_t> rows) {
  std::vector<const RdCurve*> out;
  for (std::size_t r : rows) out.push_back(c[r]);
  return out;
}

/// Batches of `size`; a trailing batch of one joins the previous batch
/// (batchnorm needs two rows) and a single example is used twice.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  if (order.size() == 1) return {{order[0], order[0]}};
  for (std::size_t i = 0; i < order.size(); i += size)
    out.emplace_back(order.begin() + i, order.begin() + std::min(order.size(), i + size));
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

std::vector<std::vector<double>> snapshot(LiteVpModel& m) {
  std::vector<std::vector<double>> s;
  for (Param* p : m.params()) s.push_back(p->value.data);
  return s;
}

void restore(LiteVpModel& m, const std::vector<std::vector<double>>& s) {
  auto ps = m.params();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value.data = s[i];
}

}  // namespace

ModelCheckpoint train(std::span<const TrainSample> samples, const TrainConfig& cfg, const GroupMask& mask,
                      const EpochCallback& on_epoch, const Architecture& arch) {
  cfg.validate();
  if (samples.empty()) throw InvalidInput("train: empty training split");
  if (arch.input != kFeatureDim || arch.outputs != kNumTargets)
    throw InternalError("train: architecture does not match the feature layout");
  const std::size_t n = samples.size();
  const bool use_clip = mask.enabled(Group::kClip);

  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (const auto& s : samples) rows.push_back(s.raw.scaler_row());

  ModelCheckpoint ck;
  ck.model = LiteVpModel(arch);
  ck.scaler = Scaler::fit(rows);
  ck.config = cfg;
  ck.mask = mask;

  Rng master(cfg.seed);
  ck.model.init(master.next_u64());
  Rng split_rng(master.next_u64());
  Rng shuffle_rng(master.next_u64());
  Rng dropout_rng(master.next_u64());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> train_idx = order, val_idx = order;
  if (n >= 10 && cfg.validation_fraction > 0.0) {
    split_rng.shuffle(std::span<std::size_t>(order));
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.validation_fraction * n)));
    val_idx.assign(order.begin(), order.begin() + n_val);
    train_idx.assign(order.begin() + n_val, order.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  }

  const Prepared data = prepare(samples, ck.scaler, mask, arch);
  const Tensor2 val_x = gather(data.x, val_idx);
  const Tensor2 val_emb = gather(data.emb, val_idx);
  const Tensor2 val_t = gather(data.target, val_idx);
  const auto val_curves = gather(data.curves, val_idx);

  Adam opt(use_clip ? ck.model.params() : ck.model.head_params(), cfg.learning_rate, cfg.l2);
  PlateauScheduler sched(cfg.scheduler, cfg.learning_rate);

  double best = std::numeric_limits<double>::infinity();
  auto best_params = snapshot(ck.model);
  ModelTrace trace;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> perm = train_idx;
    shuffle_rng.shuffle(std::span<std::size_t>(perm));
    double loss_sum = 0.0;
    std::size_t count = 0;
    const auto batches = make_batches(perm, static_cast<std::size_t>(cfg.batch_size));
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      opt.zero_grad();
      const Tensor2 y = ck.model.forward_train(gather(data.x, idx), gather(data.emb, idx), use_clip, cfg.dropout,
                                               dropout_rng, trace);
      const auto curves = gather(data.curves, idx);
      const LossResult lr =
          tolerant_composite_loss(y, gather(data.target, idx), curves, cfg.alpha_loss_weight, cfg.tolerance_vmaf);
      if (!std::isfinite(lr.loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      ck.model.backward(trace, lr.grad);
      opt.step();
      loss_sum += lr.loss * static_cast<double>(idx.size());
      count += idx.size();
    }

    const Tensor2 vy = ck.model.predict(val_x, val_emb, use_clip);
    const LossResult vl = tolerant_composite_loss(vy, val_t, val_curves, cfg.alpha_loss_weight, cfg.tolerance_vmaf);
    if (!std::isfinite(vl.loss))
      throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch));

    const EpochLog log{epoch, loss_sum / static_cast<double>(count), vl.loss, vl.l_a, vl.l_b, opt.lr()};
    ck.history.push_back(log);
    if (on_epoch) on_epoch(log);

    if (vl.loss < best) {
      best = vl.loss;
      ck.best_epoch = epoch;
      best_params = snapshot(ck.model);
    }
    const auto action = sched.step(vl.loss);
    if (action == PlateauScheduler::Action::kExhausted) break;
    opt.set_lr(sched.lr());
  }

  restore(ck.model, best_params);
  ck.model.round_to_float();
  return ck;
}

// ---- checkpoint ----

namespace {

constexpr char kMagic[4] = {'L', 'V', 'P', 'N'};

void store_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t crc32_of(const unsigned char* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json arch_to_json(const Architecture& a) {
  return {{"tokens", a.tokens},   {"clip_dim", a.clip_dim}, {"clip_out", a.clip_out}, {"input", a.input},
          {"hidden1", a.hidden1}, {"hidden2", a.hidden2},   {"hidden3", a.hidden3},   {"outputs", a.outputs}};
}

Architecture arch_from_json(const json& j) {
  Architecture a;
  a.tokens = j.at("tokens").get<std::size_t>();
  a.clip_dim = j.at("clip_dim").get<std::size_t>();
  a.clip_out = j.at("clip_out").get<std::size_t>();
  a.input = j.at("input").get<std::size_t>();
  a.hidden1 = j.at("hidden1").get<std::size_t>();
  a.hidden2 = j.at("hidden2").get<std::size_t>();
  a.hidden3 = j.at("hidden3").get<std::size_t>();
  a.outputs = j.at("outputs").get<std::size_t>();
  return a;
}

json history_to_json(const std::vector<EpochLog>& h) {
  json out = json::array();
  for (const auto& e : h)
    out.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_loss", e.val_loss},
                   {"val_l_a", e.val_l_a},
                   {"val_l_b", e.val_l_b},
                   {"lr", e.lr}});
  return out;
}

std::vector<EpochLog> history_from_json(const json& j) {
  std::vector<EpochLog> out;
  for (const auto& e : j)
    out.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_loss").get<double>(),
                   e.at("val_l_a").get<double>(), e.at("val_l_b").get<double>(), e.at("lr").get<double>()});
  return out;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelCheckpoint& ck) {
  json params = json::array();
  std::size_t count = 0;
  for (const Param* p : ck.model.params()) {
    params.push_back({{"name", p->name}, {"rows", p->value.rows}, {"cols", p->value.cols}});
    count += p->value.size();
  }
  const json header = {{"format_version", ck.format_version},
                       {"layout_version", ck.layout_version},
                       {"architecture", arch_to_json(ck.model.arch())},
                       {"mask", ck.mask.to_string()},
                       {"config", ck.config.to_json()},
                       {"scaler", ck.scaler.to_json()},
                       {"history", history_to_json(ck.history)},
                       {"best_epoch", ck.best_epoch},
                       {"params", params},
                       {"param_count", count}};
  const std::string text = header.dump();

  std::string blob;
  blob.reserve(4 * count);
  for (const Param* p : ck.model.params())
    for (double v : p->value.data) store_u32(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));

  std::string buf(kMagic, 4);
  store_u32(buf, ck.format_version);
  store_u32(buf, static_cast<std::uint32_t>(text.size()));
  buf += text;
  buf += blob;
  store_u32(buf, crc32_of(reinterpret_cast<const unsigned char*>(blob.data()), blob.size()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ck) {
  // Write to a sibling and rename so a crash never leaves half a checkpoint.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("checkpoint: cannot open " + tmp);
    save_checkpoint(f, ck);
    f.close();
    if (!f) throw IoError("checkpoint: write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("checkpoint: cannot rename to " + path.string() + ": " + ec.message());
}

ModelCheckpoint load_checkpoint(std::istream& in) {
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < 12) throw FormatError("checkpoint: header truncated (" + std::to_string(data.size()) + " bytes)");
  if (std::memcmp(p, kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  const std::uint32_t version = load_u32(p + 4);
  if (version != kCheckpointFormatVersion)
    throw VersionError("checkpoint: format version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointFormatVersion));
  const std::size_t header_len = load_u32(p + 8);
  if (data.size() - 12 < header_len) throw FormatError("checkpoint: header truncated");

  json header;
  try {
    header = json::parse(data.begin() + 12, data.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not valid JSON: ") + e.what());
  }

  ModelCheckpoint ck;
  std::size_t expected_count = 0;
  try {
    const int layout = header.at("layout_version").get<int>();
    if (layout != kLayoutVersion)
      throw VersionError("checkpoint: feature layout version " + std::to_string(layout) + ", expected " +
                         std::to_string(kLayoutVersion));
    Architecture arch;
    try {
      arch = arch_from_json(header.at("architecture"));
      arch.validate();
    } catch (const InvalidInput& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
    ck.model = LiteVpModel(arch);
    ck.layout_version = layout;
    ck.mask = GroupMask::parse(header.at("mask").get<std::string>());
    ck.config = TrainConfig::from_json(header.at("config"));
    ck.scaler = Scaler::from_json(header.at("scaler"));
    ck.history = history_from_json(header.at("history"));
    ck.best_epoch = header.at("best_epoch").get<int>();
    expected_count = header.at("param_count").get<std::size_t>();

    const auto ps = ck.model.params();
    const json& listed = header.at("params");
    if (listed.size() != ps.size()) throw FormatError("checkpoint: parameter list does not match the architecture");
    std::size_t count = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (listed[i].at("name").get<std::string>() != ps[i]->name ||
          listed[i].at("rows").get<std::size_t>() != ps[i]->value.rows ||
          listed[i].at("cols").get<std::size_t>() != ps[i]->value.cols)
        throw FormatError("checkpoint: parameter " + std::to_string(i) + " does not match the architecture (" +
                          ps[i]->name + ")");
      count += ps[i]->value.size();
    }
    if (count != expected_count) throw FormatError("checkpoint: param_count does not match the architecture");
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const ParseError& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  }

  const std::size_t blob_off = 12 + header_len;
  const std::size_t blob_len = 4 * expected_count;
  const std::size_t have = data.size() - blob_off;
  if (have < blob_len + 4)
    throw FormatError("checkpoint: truncated, " + std::to_string(have) + " bytes after the header, expected " +
                      std::to_string(blob_len + 4));
  if (have > blob_len + 4) throw FormatError("checkpoint: trailing bytes after the checksum");
  const std::uint32_t stored = load_u32(p + blob_off + blob_len);
  if (crc32_of(p + blob_off, blob_len) != stored) throw FormatError("checkpoint: CRC mismatch");

  const unsigned char* q = p + blob_off;
  for (Param* prm : ck.model.params()) {
    for (auto& v : prm->value.data) {
      v = static_cast<double>(std::bit_cast<float>(load_u32(q)));
      q += 4;
    }
  }
  return ck;
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open " + path.string());
  return load_checkpoint(f);
}

}  // namespace litevp
