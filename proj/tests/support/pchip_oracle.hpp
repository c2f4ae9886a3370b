#pragma once

// Reference monotone cubic Hermite interpolant, written independently of the
// library: slopes follow the weighted-harmonic-mean rule from Moler's
// "Numerical Computing with MATLAB" (pchipslopes), values are evaluated
// through the Hermite basis functions rather than power-form coefficients.

#include <cmath>
#include <vector>

namespace oracle {

class TextbookPchip {
 public:
  TextbookPchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    std::vector<double> h(n - 1), del(n - 1);
    for (int k = 0; k < n - 1; ++k) {
      h[k] = x_[k + 1] - x_[k];
      del[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
      d_[0] = d_[1] = del[0];
      return;
    }
    for (int k = 0; k < n - 2; ++k) {
      const bool same_sign = (del[k] > 0 && del[k + 1] > 0) || (del[k] < 0 && del[k + 1] < 0);
      if (same_sign) {
        const double w1 = 2 * h[k + 1] + h[k];
        const double w2 = h[k + 1] + 2 * h[k];
        d_[k + 1] = (w1 + w2) / (w1 / del[k] + w2 / del[k + 1]);
      }
    }
    d_[0] = end(h[0], h[1], del[0], del[1]);
    d_[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  }

  double operator()(double q) const {
    int k = 0;
    while (k < static_cast<int>(x_.size()) - 2 && q >= x_[k + 1]) ++k;
    const double h = x_[k + 1] - x_[k];
    const double s = (q - x_[k]) / h;
    const double h00 = 2 * s * s * s - 3 * s * s + 1;
    const double h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s;
    const double h11 = s * s * s - s * s;
    return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
  }

  const std::vector<double>& slopes() const { return d_; }

 private:
  static double end(double h1, double h2, double del1, double del2) {
    double d = ((2 * h1 + h2) * del1 - h1 * del2) / (h1 + h2);
    auto sgn = [](double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };
    if (sgn(d) != sgn(del1)) {
      d = 0;
    } else if (sgn(del1) != sgn(del2) && std::fabs(d) > std::fabs(3 * del1)) {
      d = 3 * del1;
    }
    return d;
  }

  std::vector<double> x_, y_, d_;
};

}  // namespace oracle
