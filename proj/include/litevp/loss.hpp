#pragma once

#include <span>

#include "litevp/rd_oracle.hpp"
#include "litevp/tensor.hpp"

namespace litevp {

struct LossResult {
  double loss = 0.0;
  double l_a = 0.0;  // mean |pred - target| in normalized QP units
  double l_b = 0.0;  // alpha * mean hinge on the VMAF error
  Tensor2 grad;      // d loss / d pred
};

/// L = mean|p - t| + alpha * mean max(0, |VMAF(255 p) - VMAF(255 t)| - tolerance).
///
/// `curves[r]` is the RD curve of batch row r. Each row holds one entry per
/// VMAF target. The VMAF term is differentiated through the curve slope; at
/// every kink (p == t, |dV| == tolerance) the subgradient 0 is used.
LossResult tolerant_composite_loss(const Tensor2& pred, const Tensor2& target, std::span<const RdCurve* const> curves,
                                   double alpha, double tolerance);

}  // namespace litevp
