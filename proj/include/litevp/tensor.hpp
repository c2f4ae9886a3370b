#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace litevp {

/// Row-major matrix of doubles: rows are batch entries, cols are features.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  std::size_t size() const { return data.size(); }

  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v);
};

/// Throws NumericError naming `op` if any entry is NaN or Inf.
void check_finite(const Tensor2& t, const char* op);

/// Throws InternalError unless rows/cols match.
void expect_shape(const Tensor2& t, std::size_t rows, std::size_t cols, const char* what);

// The kernels below accumulate every output element in a fixed order that
// does not depend on the number of rows, so one sample gives the same bits
// alone or inside a batch.

/// C = A * B. A is m x k, B is k x n.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
/// C = A * B^T. A is m x k, B is n x k.
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
/// C += A^T * B. A is k x m, B is k x n, C is m x n.
void matmul_tn_acc(const Tensor2& a, const Tensor2& b, Tensor2& c);

/// Adds `bias` (length cols) to every row.
void add_row_vector(Tensor2& t, std::span<const double> bias);
/// out[j] += sum over rows of t(r, j).
void column_sum_acc(const Tensor2& t, std::span<double> out);

/// Element-wise a += b.
void add_inplace(Tensor2& a, const Tensor2& b);

}  // namespace litevp
