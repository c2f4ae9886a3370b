#include "litevp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "litevp/error.hpp"

namespace litevp {

Dense::Dense(std::size_t in, std::size_t out, const std::string& name)
    : w_(name + ".weight", in, out), b_(name + ".bias", 1, out) {}

void Dense::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in()));
  for (auto& v : w_.value.data) v = rng.uniform(-bound, bound);
  for (auto& v : b_.value.data) v = rng.uniform(-bound, bound);
}

Tensor2 Dense::forward(const Tensor2& x) const {
  if (x.cols != in()) throw InternalError(w_.name + ": input has " + std::to_string(x.cols) + " cols, expected " +
                                          std::to_string(in()));
  Tensor2 y = matmul(x, w_.value);
  add_row_vector(y, b_.value.data);
  check_finite(y, w_.name.c_str());
  return y;
}

Tensor2 Dense::backward(const Tensor2& x, const Tensor2& dy, bool need_dx) {
  expect_shape(dy, x.rows, out(), "dense backward");
  matmul_tn_acc(x, dy, w_.grad);
  column_sum_acc(dy, b_.grad.data);
  if (!need_dx) return {};
  Tensor2 dx = matmul_nt(dy, w_.value);
  check_finite(dx, "dense backward");
  return dx;
}

BatchNorm::BatchNorm(std::size_t features, const std::string& name)
    : gamma_(name + ".gamma", 1, features),
      beta_(name + ".beta", 1, features),
      running_mean_(name + ".running_mean", 1, features, false),
      running_var_(name + ".running_var", 1, features, false) {
  gamma_.value.fill(1.0);
  running_var_.value.fill(1.0);
}

Tensor2 BatchNorm::forward_train(const Tensor2& x, BatchNormCache& cache) {
  if (x.cols != features()) throw InternalError(gamma_.name + ": feature count mismatch");
  if (x.rows < 2) throw InvalidInput(gamma_.name + ": training mode needs a batch of at least 2");
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(r, j);
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) var[j] += (x(r, j) - mean[j]) * (x(r, j) - mean[j]);
  for (auto& v : var) v /= static_cast<double>(n);

  cache.inv_std.resize(d);
  for (std::size_t j = 0; j < d; ++j) cache.inv_std[j] = 1.0 / std::sqrt(var[j] + kEps);
  cache.xhat = Tensor2(n, d);
  Tensor2 y(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (x(r, j) - mean[j]) * cache.inv_std[j];
      cache.xhat(r, j) = xh;
      y(r, j) = gamma_.value.data[j] * xh + beta_.value.data[j];
    }
  }
  const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
  for (std::size_t j = 0; j < d; ++j) {
    running_mean_.value.data[j] = (1 - kMomentum) * running_mean_.value.data[j] + kMomentum * mean[j];
    running_var_.value.data[j] = (1 - kMomentum) * running_var_.value.data[j] + kMomentum * var[j] * unbias;
  }
  check_finite(y, gamma_.name.c_str());
  return y;
}

Tensor2 BatchNorm::forward_eval(const Tensor2& x) const {
  if (x.cols != features()) throw InternalError(gamma_.name + ": feature count mismatch");
  Tensor2 y(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double inv = 1.0 / std::sqrt(running_var_.value.data[j] + kEps);
      y(r, j) = gamma_.value.data[j] * (x(r, j) - running_mean_.value.data[j]) * inv + beta_.value.data[j];
    }
  }
  check_finite(y, gamma_.name.c_str());
  return y;
}

Tensor2 BatchNorm::backward(const BatchNormCache& cache, const Tensor2& dy) {
  const std::size_t n = cache.xhat.rows, d = cache.xhat.cols;
  expect_shape(dy, n, d, "batchnorm backward");
  std::vector<double> sum_dxh(d, 0.0), sum_dxh_xh(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy(r, j);
      gamma_.grad.data[j] += g * cache.xhat(r, j);
      beta_.grad.data[j] += g;
      const double dxh = g * gamma_.value.data[j];
      sum_dxh[j] += dxh;
      sum_dxh_xh[j] += dxh * cache.xhat(r, j);
    }
  }
  Tensor2 dx(n, d);
  const double nn = static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy(r, j) * gamma_.value.data[j];
      dx(r, j) = cache.inv_std[j] / nn * (nn * dxh - sum_dxh[j] - cache.xhat(r, j) * sum_dxh_xh[j]);
    }
  }
  check_finite(dx, "batchnorm backward");
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Tensor2 gelu(const Tensor2& x) {
  Tensor2 y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = gelu(x.data[i]);
  check_finite(y, "gelu");
  return y;
}

Tensor2 gelu_backward(const Tensor2& x, const Tensor2& dy) {
  if (!x.same_shape(dy)) throw InternalError("gelu backward: shape mismatch");
  Tensor2 dx(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) dx.data[i] = dy.data[i] * gelu_grad(x.data[i]);
  return dx;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor2 sigmoid(const Tensor2& x) {
  Tensor2 y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = sigmoid(x.data[i]);
  check_finite(y, "sigmoid");
  return y;
}

Tensor2 sigmoid_backward(const Tensor2& y, const Tensor2& dy) {
  if (!y.same_shape(dy)) throw InternalError("sigmoid backward: shape mismatch");
  Tensor2 dx(y.rows, y.cols);
  for (std::size_t i = 0; i < y.size(); ++i) dx.data[i] = dy.data[i] * y.data[i] * (1.0 - y.data[i]);
  return dx;
}

Tensor2 dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (rate < 0 || rate >= 1) throw InvalidInput("dropout rate must be in [0, 1)");
  Tensor2 m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (auto& v : m.data) v = rng.bernoulli(rate) ? 0.0 : keep;
  return m;
}

Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) throw InternalError("hadamard: shape mismatch");
  Tensor2 c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) c.data[i] = a.data[i] * b.data[i];
  return c;
}

Tensor2 pair_average(const Tensor2& x) {
  if (x.cols % 2 != 0) throw InternalError("pair_average: odd width");
  Tensor2 y(x.rows, x.cols / 2);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t j = 0; j < y.cols; ++j) y(r, j) = 0.5 * (x(r, 2 * j) + x(r, 2 * j + 1));
  return y;
}

Tensor2 pair_average_backward(const Tensor2& dy) {
  Tensor2 dx(dy.rows, dy.cols * 2);
  for (std::size_t r = 0; r < dy.rows; ++r) {
    for (std::size_t j = 0; j < dy.cols; ++j) {
      dx(r, 2 * j) = 0.5 * dy(r, j);
      dx(r, 2 * j + 1) = 0.5 * dy(r, j);
    }
  }
  return dx;
}

namespace {

Tensor2 block(const Tensor2& t, std::size_t first_row, std::size_t n) {
  Tensor2 b(n, t.cols);
  std::copy_n(t.row(first_row), n * t.cols, b.data.begin());
  return b;
}

void put_block(Tensor2& t, std::size_t first_row, const Tensor2& b) {
  std::copy(b.data.begin(), b.data.end(), t.row(first_row));
}

void softmax_rows(Tensor2& s) {
  for (std::size_t r = 0; r < s.rows; ++r) {
    double* row = s.row(r);
    const double mx = *std::max_element(row, row + s.cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < s.cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::size_t j = 0; j < s.cols; ++j) row[j] /= sum;
  }
}

}  // namespace

SelfAttention::SelfAttention(std::size_t tokens, std::size_t dim, std::size_t out, const std::string& name)
    : tokens_(tokens),
      dim_(dim),
      q_(dim, dim, name + ".query"),
      k_(dim, dim, name + ".key"),
      v_(dim, dim, name + ".value"),
      proj_(dim, out, name + ".proj") {}

void SelfAttention::init(Rng& rng) {
  q_.init(rng);
  k_.init(rng);
  v_.init(rng);
  proj_.init(rng);
}

std::vector<Param*> SelfAttention::params() {
  std::vector<Param*> out;
  for (Dense* d : {&q_, &k_, &v_, &proj_})
    for (Param* p : d->params()) out.push_back(p);
  return out;
}

Tensor2 SelfAttention::tokens_of(const Tensor2& x) const {
  if (x.cols != tokens_ * dim_) {
    throw InternalError("attention: input width " + std::to_string(x.cols) + " is not " + std::to_string(tokens_) +
                        " tokens x " + std::to_string(dim_));
  }
  // B x (T*D) and (B*T) x D share the same row-major storage.
  Tensor2 t;
  t.rows = x.rows * tokens_;
  t.cols = dim_;
  t.data = x.data;
  return t;
}

Tensor2 SelfAttention::run(const Tensor2& x, AttentionCache* cache) const {
  const Tensor2 xt = tokens_of(x);
  const std::size_t batch = x.rows, T = tokens_, D = dim_;
  Tensor2 q = q_.forward(xt), k = k_.forward(xt), v = v_.forward(xt);
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));

  Tensor2 pooled(batch, D);
  std::vector<Tensor2> attn;
  if (cache) attn.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor2 qb = block(q, b * T, T), kb = block(k, b * T, T), vb = block(v, b * T, T);
    Tensor2 s = matmul_nt(qb, kb);
    for (auto& e : s.data) e *= scale;
    softmax_rows(s);
    const Tensor2 o = matmul(s, vb);
    double* pr = pooled.row(b);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < D; ++j) pr[j] += o(t, j);
    for (std::size_t j = 0; j < D; ++j) pr[j] /= static_cast<double>(T);
    if (cache) attn.push_back(std::move(s));
  }
  Tensor2 out = proj_.forward(pooled);
  if (cache) {
    cache->x = xt;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->pooled = std::move(pooled);
  }
  return out;
}

Tensor2 SelfAttention::forward(const Tensor2& x) const { return run(x, nullptr); }

Tensor2 SelfAttention::forward_train(const Tensor2& x, AttentionCache& cache) const { return run(x, &cache); }

Tensor2 SelfAttention::attention_weights(const Tensor2& x, std::size_t sample) const {
  if (sample >= x.rows) throw InternalError("attention_weights: sample out of range");
  AttentionCache cache;
  Tensor2 one(1, x.cols);
  std::copy_n(x.row(sample), x.cols, one.data.begin());
  run(one, &cache);
  return cache.attn[0];
}

Tensor2 SelfAttention::backward(const AttentionCache& cache, const Tensor2& dy, bool need_dx) {
  const std::size_t batch = cache.pooled.rows, T = tokens_, D = dim_;
  const Tensor2 dpooled = proj_.backward(cache.pooled, dy, true);
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));

  Tensor2 dq(batch * T, D), dk(batch * T, D), dv(batch * T, D);
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor2& a = cache.attn[b];
    const Tensor2 qb = block(cache.q, b * T, T), kb = block(cache.k, b * T, T), vb = block(cache.v, b * T, T);
    // Every token contributes 1/T of the pooled output.
    Tensor2 d_o(T, D);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < D; ++j) d_o(t, j) = dpooled(b, j) / static_cast<double>(T);

    Tensor2 da = matmul_nt(d_o, vb);
    Tensor2 dvb(T, D);
    matmul_tn_acc(a, d_o, dvb);

    Tensor2 ds(T, T);
    for (std::size_t r = 0; r < T; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < T; ++c) dot += da(r, c) * a(r, c);
      for (std::size_t c = 0; c < T; ++c) ds(r, c) = a(r, c) * (da(r, c) - dot) * scale;
    }
    const Tensor2 dqb = matmul(ds, kb);
    Tensor2 dkb(T, D);
    matmul_tn_acc(ds, qb, dkb);
    put_block(dq, b * T, dqb);
    put_block(dk, b * T, dkb);
    put_block(dv, b * T, dvb);
  }

  Tensor2 dx = q_.backward(cache.x, dq, need_dx);
  Tensor2 dxk = k_.backward(cache.x, dk, need_dx);
  Tensor2 dxv = v_.backward(cache.x, dv, need_dx);
  if (!need_dx) return {};
  add_inplace(dx, dxk);
  add_inplace(dx, dxv);
  // Back to B x (T*D).
  dx.rows = batch;
  dx.cols = T * D;
  return dx;
}

std::size_t count_trainable(const std::vector<Param*>& params) {
  std::size_t n = 0;
  for (const Param* p : params)
    if (p->trainable) n += p->value.size();
  return n;
}

}  // namespace litevp
