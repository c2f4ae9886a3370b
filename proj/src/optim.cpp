#include "litevp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace litevp {

Adam::Adam(std::vector<Param*> params, double lr, double l2) : lr_(lr), l2_(l2) {
  for (Param* p : params) {
    if (!p->trainable) continue;
    params_.push_back(p);
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& w = params_[i]->value.data;
    const auto& gr = params_[i]->grad.data;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = gr[j] + l2_ * w[j];
      m[j] = kBeta1 * m[j] + (1 - kBeta1) * g;
      v[j] = kBeta2 * v[j] + (1 - kBeta2) * g * g;
      w[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + kEps);
    }
  }
}

PlateauScheduler::PlateauScheduler(const SchedulerConfig& cfg, double lr)
    : cfg_(cfg), lr_(lr), best_(std::numeric_limits<double>::infinity()) {}

PlateauScheduler::Action PlateauScheduler::step(double val_loss) {
  if (best_ - val_loss >= cfg_.min_delta || (std::isinf(best_) && std::isfinite(val_loss))) {
    best_ = val_loss;
    bad_ = 0;
    return Action::kNone;
  }
  if (++bad_ < cfg_.patience) return Action::kNone;
  bad_ = 0;
  if (lr_ <= cfg_.min_lr) return Action::kExhausted;
  lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
  return Action::kReduced;
}

}  // namespace litevp
