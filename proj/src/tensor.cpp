#include "litevp/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "litevp/error.hpp"

namespace litevp {

void Tensor2::fill(double v) { std::fill(data.begin(), data.end(), v); }

void check_finite(const Tensor2& t, const char* op) {
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    if (!std::isfinite(t.data[i])) {
      throw NumericError(std::string(op) + ": non-finite value at (" + std::to_string(i / std::max<std::size_t>(t.cols, 1)) +
                         ", " + std::to_string(i % std::max<std::size_t>(t.cols, 1)) + ")");
    }
  }
}

void expect_shape(const Tensor2& t, std::size_t rows, std::size_t cols, const char* what) {
  if (t.rows != rows || t.cols != cols) {
    throw InternalError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", got " + std::to_string(t.rows) + "x" + std::to_string(t.cols));
  }
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.rows) throw InternalError("matmul: inner dimensions differ");
  const std::size_t m = a.rows, k = a.cols, n = b.cols;
  Tensor2 c(m, n);
  std::size_t i = 0;
  // Four rows at a time to reuse each loaded row of B. Each output element
  // still sums its k terms in ascending order, same as the one-row tail.
  for (; i + 4 <= m; i += 4) {
    double* __restrict c0 = c.row(i);
    double* __restrict c1 = c.row(i + 1);
    double* __restrict c2 = c.row(i + 2);
    double* __restrict c3 = c.row(i + 3);
    for (std::size_t p = 0; p < k; ++p) {
      const double a0 = a(i, p), a1 = a(i + 1, p), a2 = a(i + 2, p), a3 = a(i + 3, p);
      const double* __restrict br = b.row(p);
      for (std::size_t j = 0; j < n; ++j) {
        c0[j] += a0 * br[j];
        c1[j] += a1 * br[j];
        c2[j] += a2 * br[j];
        c3[j] += a3 * br[j];
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double ai = a(i, p);
      const double* br = b.row(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += ai * br[j];
    }
  }
  return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.cols) throw InternalError("matmul_nt: inner dimensions differ");
  const std::size_t m = a.rows, k = a.cols, n = b.rows;
  Tensor2 c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* br = b.row(j);
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        s0 += ar[p] * br[p];
        s1 += ar[p + 1] * br[p + 1];
        s2 += ar[p + 2] * br[p + 2];
        s3 += ar[p + 3] * br[p + 3];
      }
      double s = (s0 + s1) + (s2 + s3);
      for (; p < k; ++p) s += ar[p] * br[p];
      c(i, j) = s;
    }
  }
  return c;
}

void matmul_tn_acc(const Tensor2& a, const Tensor2& b, Tensor2& c) {
  if (a.rows != b.rows || c.rows != a.cols || c.cols != b.cols) throw InternalError("matmul_tn: shape mismatch");
  const std::size_t k = a.rows, m = a.cols, n = b.cols;
  for (std::size_t p = 0; p < k; ++p) {
    const double* ar = a.row(p);
    const double* br = b.row(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double ai = ar[i];
      if (ai == 0.0) continue;
      double* ci = c.row(i);
      for (std::size_t j = 0; j < n; ++j) ci[j] += ai * br[j];
    }
  }
}

void add_row_vector(Tensor2& t, std::span<const double> bias) {
  if (bias.size() != t.cols) throw InternalError("add_row_vector: length mismatch");
  for (std::size_t r = 0; r < t.rows; ++r) {
    double* tr = t.row(r);
    for (std::size_t j = 0; j < t.cols; ++j) tr[j] += bias[j];
  }
}

void column_sum_acc(const Tensor2& t, std::span<double> out) {
  if (out.size() != t.cols) throw InternalError("column_sum: length mismatch");
  for (std::size_t r = 0; r < t.rows; ++r) {
    const double* tr = t.row(r);
    for (std::size_t j = 0; j < t.cols; ++j) out[j] += tr[j];
  }
}

void add_inplace(Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) throw InternalError("add: shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

}  // namespace litevp
