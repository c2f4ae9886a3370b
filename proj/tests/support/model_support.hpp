#pragma once

// Shared helpers for the model tests and the acceptance runner.

#include <cmath>
#include <string>
#include <vector>

#include "litevp/loss.hpp"
#include "litevp/model.hpp"
#include "support/gradcheck.hpp"

namespace modelsupport {

// vmaf(qp) = 100 / (1 + exp((qp - c) / s)) sampled at 24 evenly spread QPs.
inline litevp::RdCurve logistic_curve(double c, double s) {
  std::vector<litevp::RdSample> samples;
  for (int k = 0; k < 24; ++k) {
    const int qp = static_cast<int>(std::lround(k * 255.0 / 23.0));
    samples.push_back({qp, 100.0 / (1.0 + std::exp((qp - c) / s))});
  }
  return litevp::RdCurve::fit(samples);
}

inline litevp::RawFeatures random_raw(litevp::Rng& rng) {
  litevp::RawFeatures raw;
  for (auto& v : raw.bitstream.frame_level) v = rng.uniform();
  for (auto& v : raw.bitstream.video_level) v = rng.uniform();
  raw.bitstream.key_frames = {true, false, false, false, false, false, false, false};
  raw.meta = {rng.uniform(2, 20), rng.bernoulli(0.5) ? 1.0 : 0.0, rng.uniform(20, 230), rng.uniform(640, 3840),
              rng.uniform(360, 2160), rng.uniform(24, 60)};
  std::vector<double> cs(litevp::ComplexityStats::kSize);
  for (auto& v : cs) v = rng.uniform(0, 100);
  raw.complexity = litevp::ComplexityStats::from_array(cs);
  raw.complexity.valid.fill(true);
  raw.complexity_valid = true;
  return raw;
}

inline litevp::ClipEmbedding random_embedding(litevp::Rng& rng) {
  litevp::ClipEmbedding e;
  for (auto& v : e.values) v = static_cast<float>(rng.normal(0.0, 0.05));
  return e;
}

inline litevp::TrainSample random_sample(litevp::Rng& rng, const std::string& id) {
  litevp::TrainSample s;
  s.id = id;
  s.raw = random_raw(rng);
  s.embedding = random_embedding(rng);
  s.curve = logistic_curve(rng.uniform(110, 200), rng.uniform(8, 16));
  const auto targets = litevp::derive_targets(s.curve);
  for (std::size_t k = 0; k < litevp::kNumTargets; ++k) s.target_qp[k] = targets.derived_qps[k].qp;
  return s;
}

inline litevp::Tensor2 random_tensor(litevp::Rng& rng, std::size_t r, std::size_t c, double scale) {
  litevp::Tensor2 t(r, c);
  for (auto& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

struct CompositionResult {
  double max_rel_err = 0.0;
  std::string worst;
  std::size_t checked = 0;
  double clip_grad_norm = 0.0;
  // Entries whose exact derivative is 0 (see structural_zero below): largest
  // |analytic| and |finite difference| seen.
  double zero_max_analytic = 0.0;
  double zero_max_fd = 0.0;
  std::size_t zero_checked = 0;
};

// Tensors with an exactly zero loss derivative. A key bias adds q_t . b_k to
// every score of row t, which the softmax cancels. In train mode the value and
// projection biases shift the clip slot by the same vector for every row of
// the batch, which the first batchnorm subtracts again. A finite difference
// there measures only the rounding noise of the loss (VMAF values near 100
// carry ~1.4e-14 absolute error, ~2e-9 after dividing by the step), so these
// are checked against 0 rather than by relative error.
inline bool structural_zero(const std::string& name) {
  return name == "clip.key.bias" || name == "clip.value.bias" || name == "clip.proj.bias" ||
         name == "head.fc1.bias" || name == "head.fc2.bias" || name == "head.fc3.bias";
}

// Bounds for the structural zeros: analytic values are sums of rounded terms,
// finite differences are rounding noise divided by the step.
inline constexpr double kZeroAnalyticBound = 1e-12;
inline constexpr double kZeroFdBound = 2e-8;

// Denominator floor of the relative error for the composed loss. The VMAF
// term evaluates curve values near 100, whose rounding (~7e-15) becomes
// ~1e-9 of noise in a finite difference at step 1e-5; measured on the
// structural zeros above. With a 1e-3 floor that noise alone reaches the
// 1e-6 tolerance, so the composition uses 1e-2 (absolute agreement 1e-8 for
// gradients below 1e-2, relative 1e-6 above).
inline constexpr double kCompositionFloor = 1e-2;

// Finite-difference check of loss(ClipNet + head) in train mode (batchnorm
// batch statistics, fixed dropout masks) against the analytic backward pass.
// Checks up to `per_tensor` entries of every trainable tensor plus the inputs.
inline CompositionResult composed_gradcheck(const litevp::Architecture& arch, std::uint64_t seed,
                                            std::size_t per_tensor, std::size_t batch = 4, double alpha = 1.0,
                                            double floor = kCompositionFloor) {
  using namespace litevp;
  Rng rng(seed);
  LiteVpModel model(arch);
  model.init(rng.next_u64());
  for (Param* p : model.params()) {
    if (p->name.ends_with(".gamma"))
      for (auto& v : p->value.data) v = rng.uniform(0.5, 1.5);
    if (p->name.ends_with(".beta"))
      for (auto& v : p->value.data) v = rng.uniform(-0.2, 0.2);
  }
  Tensor2 x = random_tensor(rng, batch, arch.input, 1.0);
  Tensor2 emb = random_tensor(rng, batch, arch.tokens * arch.clip_dim, 1.0);
  Tensor2 target = random_tensor(rng, batch, arch.outputs, 0.3);
  for (auto& v : target.data) v += 0.5;
  std::vector<RdCurve> curves;
  for (std::size_t b = 0; b < batch; ++b) curves.push_back(logistic_curve(rng.uniform(110, 170), rng.uniform(8, 16)));
  std::vector<const RdCurve*> cp;
  for (const auto& c : curves) cp.push_back(&c);
  const std::uint64_t drop_seed = rng.next_u64();

  ModelTrace trace;
  auto run = [&](bool with_backward) {
    Rng drop(drop_seed);
    const Tensor2 y = model.forward_train(x, emb, true, 0.2, drop, trace);
    LossResult r = tolerant_composite_loss(y, target, cp, alpha, 2.0);
    Tensor2 dx;
    if (with_backward) dx = model.backward(trace, r.grad);
    return std::pair{r.loss, dx};
  };

  for (Param* p : model.params()) p->zero_grad();
  const auto [loss0, dx] = run(true);
  (void)loss0;
  // Snapshot gradients; the checker calls f() which must not touch them.
  std::vector<std::vector<double>> grads;
  for (Param* p : model.params()) grads.push_back(p->grad.data);

  auto f = [&] { return run(false).first; };
  auto pick = [&](std::size_t n) {
    std::vector<std::size_t> idx;
    if (n <= per_tensor) {
      for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      for (std::size_t i = 0; i < per_tensor; ++i) idx.push_back(static_cast<std::size_t>(rng.below(n)));
    }
    return idx;
  };

  CompositionResult out;
  auto record = [&](const gradcheck::Result& r, const std::string& name) {
    out.checked += r.checked;
    if (out.worst.empty() || r.max_rel_err > out.max_rel_err) {
      out.max_rel_err = r.max_rel_err;
      out.worst = name + "[" + std::to_string(r.worst) + "]";
    }
  };

  // Inputs outside the clip slot (the slot is overwritten by ClipNet).
  {
    std::vector<std::size_t> idx;
    for (std::size_t i : pick(x.size()))
      if (i % arch.input < arch.clip_offset()) idx.push_back(i);
    if (!idx.empty()) record(gradcheck::check(x.data, dx.data, f, idx, floor), "input");
  }
  const auto ps = model.params();
  for (std::size_t t = 0; t < ps.size(); ++t) {
    if (!ps[t]->trainable) continue;
    if (structural_zero(ps[t]->name)) {
      for (std::size_t i : pick(ps[t]->value.size())) {
        out.zero_max_analytic = std::max(out.zero_max_analytic, std::fabs(grads[t][i]));
        out.zero_max_fd =
            std::max(out.zero_max_fd, std::fabs(gradcheck::central_difference(ps[t]->value.data, i, f)));
        ++out.zero_checked;
      }
      continue;
    }
    record(gradcheck::check(ps[t]->value.data, grads[t], f, pick(ps[t]->value.size()), floor), ps[t]->name);
  }
  double norm = 0.0;
  for (std::size_t t = 0; t < ps.size(); ++t)
    if (ps[t]->name.starts_with("clip."))
      for (double g : grads[t]) norm += g * g;
  out.clip_grad_norm = std::sqrt(norm);
  return out;
}

}  // namespace modelsupport
