#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "litevp/rd_oracle.hpp"
#include "litevp/rng.hpp"

namespace testgen {

// Relative error with an absolute floor on the denominator so that entries
// whose true value is ~0 are judged on absolute error instead.
inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// `n` distinct QPs in [0,255] with strictly decreasing VMAF starting near 100.
inline std::vector<litevp::RdSample> random_monotone_samples(litevp::Rng& rng, std::size_t n = 24) {
  std::vector<int> all(256);
  for (int i = 0; i < 256; ++i) all[i] = i;
  rng.shuffle(std::span<int>(all));
  std::vector<int> qps(all.begin(), all.begin() + static_cast<long>(n));
  std::sort(qps.begin(), qps.end());

  std::vector<double> steps(n);
  double total = 0.0;
  for (auto& s : steps) {
    s = rng.uniform(0.05, 1.0);
    total += s;
  }
  const double top = rng.uniform(97.0, 100.0);
  const double bottom = rng.uniform(5.0, 70.0);
  std::vector<litevp::RdSample> out;
  double v = top;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({qps[i], v});
    v -= steps[i] / total * (top - bottom);
  }
  return out;
}

}  // namespace testgen
