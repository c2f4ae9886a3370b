#pragma once

#include <span>

namespace litevp::stats {

// Summary of a sample. std is the population standard deviation, percentiles
// interpolate linearly between order statistics (position p * (n - 1)).
struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};

double mean(std::span<const double> values);
double population_std(std::span<const double> values);

// `sorted` must be ascending and non-empty; p in [0, 1].
double percentile_sorted(std::span<const double> sorted, double p);

// Empty input yields an all-zero summary.
Summary summarize(std::span<const double> values);

}  // namespace litevp::stats
