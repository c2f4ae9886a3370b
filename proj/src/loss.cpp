#include "litevp/loss.hpp"

#include <cmath>

#include "litevp/error.hpp"

namespace litevp {

namespace {

constexpr double kQpScale = 255.0;

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

LossResult tolerant_composite_loss(const Tensor2& pred, const Tensor2& target, std::span<const RdCurve* const> curves,
                                   double alpha, double tolerance) {
  if (!pred.same_shape(target)) throw InternalError("loss: prediction and target shapes differ");
  if (curves.size() != pred.rows) throw InternalError("loss: one RD curve per batch row required");
  if (pred.size() == 0) throw InternalError("loss: empty batch");

  LossResult r;
  r.grad = Tensor2(pred.rows, pred.cols);
  const double n = static_cast<double>(pred.size());
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < pred.rows; ++i) {
    const RdCurve* curve = curves[i];
    if (curve == nullptr || !curve->fitted()) throw InternalError("loss: unfitted RD curve for row " + std::to_string(i));
    for (std::size_t j = 0; j < pred.cols; ++j) {
      const double p = pred(i, j), t = target(i, j);
      const double diff = p - t;
      sum_a += std::abs(diff);
      double g = sign(diff) / n;

      const double dv = curve->evaluate(kQpScale * p) - curve->evaluate(kQpScale * t);
      const double excess = std::abs(dv) - tolerance;
      if (excess > 0) {
        sum_b += excess;
        g += alpha / n * sign(dv) * curve->derivative(kQpScale * p) * kQpScale;
      }
      r.grad(i, j) = g;
    }
  }
  r.l_a = sum_a / n;
  r.l_b = alpha * sum_b / n;
  r.loss = r.l_a + r.l_b;
  if (!std::isfinite(r.loss)) throw NumericError("loss: non-finite value");
  return r;
}

}  // namespace litevp
