#pragma once

#include <vector>

#include "litevp/nn.hpp"
#include "litevp/train_config.hpp"

namespace litevp {

/// Adam with bias correction. L2 is folded into the gradient
/// (g += l2 * w) before the moment updates. Non-trainable params are skipped.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Adam(std::vector<Param*> params, double lr, double l2);

  void step();
  void zero_grad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long steps() const { return t_; }

 private:
  std::vector<Param*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, l2_;
  long t_ = 0;
};

/// Reduce-on-plateau on the validation loss.
class PlateauScheduler {
 public:
  enum class Action { kNone, kReduced, kExhausted };

  PlateauScheduler(const SchedulerConfig& cfg, double lr);

  /// Records one epoch. An epoch counts as an improvement when it beats the
  /// best loss so far by at least min_delta. After `patience` epochs in a row
  /// without one, lr becomes max(lr * factor, min_lr) and the counter resets.
  /// A reduction requested while lr already sits at min_lr reports kExhausted.
  Action step(double val_loss);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int bad_epochs() const { return bad_; }

 private:
  SchedulerConfig cfg_;
  double lr_;
  double best_;
  int bad_ = 0;
};

}  // namespace litevp
