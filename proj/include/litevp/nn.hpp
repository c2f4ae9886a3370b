#pragma once

#include <string>
#include <utility>
#include <vector>

#include "litevp/rng.hpp"
#include "litevp/tensor.hpp"

namespace litevp {

/// A named parameter tensor and its gradient accumulator. Running batchnorm
/// statistics are stored as non-trainable params so they persist alongside
/// the weights.
struct Param {
  std::string name;
  Tensor2 value;
  Tensor2 grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, std::size_t rows, std::size_t cols, bool train = true)
      : name(std::move(n)), value(rows, cols), grad(rows, cols), trainable(train) {}
  void zero_grad() { grad.fill(0.0); }
};

/// y = x W + b, W stored in x out.
class Dense {
 public:
  Dense(std::size_t in, std::size_t out, const std::string& name);

  /// Uniform in [-1/sqrt(in), 1/sqrt(in)] for both W and b.
  void init(Rng& rng);

  std::size_t in() const { return w_.value.rows; }
  std::size_t out() const { return w_.value.cols; }

  Tensor2 forward(const Tensor2& x) const;
  /// Accumulates dW, db from the forward input `x`. Returns dx unless
  /// `need_dx` is false (then an empty tensor).
  Tensor2 backward(const Tensor2& x, const Tensor2& dy, bool need_dx = true);

  std::vector<Param*> params() { return {&w_, &b_}; }
  Param& weight() { return w_; }
  Param& bias() { return b_; }
  const Param& weight() const { return w_; }
  const Param& bias() const { return b_; }

 private:
  Param w_, b_;
};

struct BatchNormCache {
  Tensor2 xhat;
  std::vector<double> inv_std;
};

/// Batch normalization over the rows. Train mode normalizes with batch
/// statistics (biased variance) and updates the running estimates with
/// momentum; eval mode uses the running estimates only.
class BatchNorm {
 public:
  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;

  BatchNorm(std::size_t features, const std::string& name);

  std::size_t features() const { return gamma_.value.cols; }

  /// Requires at least 2 rows.
  Tensor2 forward_train(const Tensor2& x, BatchNormCache& cache);
  Tensor2 forward_eval(const Tensor2& x) const;
  Tensor2 backward(const BatchNormCache& cache, const Tensor2& dy);

  std::vector<Param*> params() { return {&gamma_, &beta_, &running_mean_, &running_var_}; }
  Param& gamma() { return gamma_; }
  Param& beta() { return beta_; }
  Param& running_mean() { return running_mean_; }
  Param& running_var() { return running_var_; }

 private:
  Param gamma_, beta_, running_mean_, running_var_;
};

/// x * Phi(x) with the exact normal CDF.
double gelu(double x);
double gelu_grad(double x);
Tensor2 gelu(const Tensor2& x);
Tensor2 gelu_backward(const Tensor2& x, const Tensor2& dy);

double sigmoid(double x);
Tensor2 sigmoid(const Tensor2& x);
/// Takes the forward output y.
Tensor2 sigmoid_backward(const Tensor2& y, const Tensor2& dy);

/// Inverted dropout mask: each entry is 0 with probability `rate`, otherwise
/// 1 / (1 - rate).
Tensor2 dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);
Tensor2 hadamard(const Tensor2& a, const Tensor2& b);

/// Parameter-free skip that halves the width: out[j] = (x[2j] + x[2j+1]) / 2.
Tensor2 pair_average(const Tensor2& x);
Tensor2 pair_average_backward(const Tensor2& dy);

struct AttentionCache {
  Tensor2 x;        // (B*T) x D
  Tensor2 q, k, v;  // (B*T) x D
  std::vector<Tensor2> attn;  // B of T x T softmax weights
  Tensor2 pooled;   // B x D
};

/// Single-head scaled dot-product self-attention over T tokens of width D,
/// mean-pooled over tokens, then projected D -> out. The input is B x (T*D),
/// one sample per row with tokens laid out consecutively.
class SelfAttention {
 public:
  SelfAttention(std::size_t tokens, std::size_t dim, std::size_t out, const std::string& name);

  void init(Rng& rng);

  std::size_t tokens() const { return tokens_; }
  std::size_t dim() const { return dim_; }

  Tensor2 forward(const Tensor2& x) const;
  Tensor2 forward_train(const Tensor2& x, AttentionCache& cache) const;
  /// Accumulates parameter gradients; returns dx (B x T*D) when asked.
  Tensor2 backward(const AttentionCache& cache, const Tensor2& dy, bool need_dx = true);

  /// Softmax weights for one sample (T x T), for inspection.
  Tensor2 attention_weights(const Tensor2& x, std::size_t sample) const;

  std::vector<Param*> params();
  Dense& query() { return q_; }
  Dense& key() { return k_; }
  Dense& value() { return v_; }
  Dense& projection() { return proj_; }

 private:
  Tensor2 tokens_of(const Tensor2& x) const;
  Tensor2 run(const Tensor2& x, AttentionCache* cache) const;

  std::size_t tokens_, dim_;
  Dense q_, k_, v_, proj_;
};

/// Total number of trainable scalars.
std::size_t count_trainable(const std::vector<Param*>& params);

}  // namespace litevp
