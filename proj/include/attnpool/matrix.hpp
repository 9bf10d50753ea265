#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "attnpool/rng.hpp"

namespace attnpool {

/// Dense row-major matrix of 64-bit floats. The single numeric carrier for
/// every tensor in the pipeline. All kernels sum in a fixed index order
/// (contraction index ascending) so results are bitwise reproducible.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row_ptr(std::size_t i) { return data.data() + i * cols; }
  const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const;

  /// First `n` rows as a copy.
  Matrix top_rows(std::size_t n) const;
};

/// "RxC" for error messages.
std::string shape_str(std::size_t rows, std::size_t cols);

/// C = A * B, summation over k in ascending order for every output entry.
/// Throws std::invalid_argument naming both shapes on a mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Gradients of C = A*B given dC: dA = dC * B^T, dB = A^T * dC.
void matmul_backward(const Matrix& d_out, const Matrix& a, const Matrix& b, Matrix& d_a,
                     Matrix& d_b);

/// Per-row stable softmax (subtract row max, exponentiate, normalize).
Matrix row_softmax(const Matrix& x);

/// Softmax with per-column validity flags shared by all rows. Invalid
/// columns contribute an additive -1e9 to the logit before the stable
/// softmax, which drives their output weight to (numerically) zero.
/// Throws if no column is valid.
Matrix masked_row_softmax(const Matrix& x, const std::vector<std::uint8_t>& valid);

/// Row-wise gradient of y = softmax(x): dx_j = y_j * (dy_j - sum_k y_k dy_k).
Matrix softmax_backward(const Matrix& d_out, const Matrix& softmax_out);

/// log(sum_j exp(x_j)) over a contiguous range, max-shifted.
double log_sum_exp(const double* x, std::size_t n);

/// Entries uniform in +-sqrt(6/(rows+cols)); consumes exactly rows*cols
/// draws from rng, filled in row-major order.
Matrix init_xavier(Rng& rng, std::size_t rows, std::size_t cols);

/// Debug-build contract check: throws std::domain_error if any entry is
/// NaN or infinite. Compiled out under NDEBUG.
void debug_check_finite(const Matrix& m, const char* what);

}  // namespace attnpool
