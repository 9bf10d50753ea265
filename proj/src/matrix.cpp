#include "attnpool/matrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace attnpool {

std::string shape_str(std::size_t rows, std::size_t cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

std::string Matrix::shape_str() const { return attnpool::shape_str(rows, cols); }

Matrix Matrix::top_rows(std::size_t n) const {
  Matrix out(n, cols);
  std::copy(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n * cols), out.data.begin());
  return out;
}

void debug_check_finite(const Matrix& m, const char* what) {
#ifndef NDEBUG
  for (double v : m.data) {
    if (!std::isfinite(v)) {
      throw std::domain_error(std::string("non-finite entry in ") + what);
    }
  }
#else
  (void)m;
  (void)what;
#endif
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul shape mismatch: " + a.shape_str() + " * " + b.shape_str());
  }
  Matrix out(a.rows, b.cols);
  // i-k-j order: for each output entry the k-sum still accumulates in
  // ascending k, and the j-inner loop is contiguous.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) {
      out(j, i) = a(i, j);
    }
  }
  return out;
}

void matmul_backward(const Matrix& d_out, const Matrix& a, const Matrix& b, Matrix& d_a,
                     Matrix& d_b) {
  if (d_out.rows != a.rows || d_out.cols != b.cols || a.cols != b.rows) {
    throw std::invalid_argument("matmul_backward shape mismatch: d=" + d_out.shape_str() + " a=" +
                                a.shape_str() + " b=" + b.shape_str());
  }
  d_a = matmul(d_out, transpose(b));
  d_b = matmul(transpose(a), d_out);
}

Matrix row_softmax(const Matrix& x) {
  if (x.rows == 0 || x.cols == 0) {
    throw std::invalid_argument("row_softmax on empty matrix " + x.shape_str());
  }
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* in = x.row_ptr(i);
    double* o = out.row_ptr(i);
    double m = in[0];
    for (std::size_t j = 1; j < x.cols; ++j) {
      if (in[j] > m) m = in[j];
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
      o[j] = std::exp(in[j] - m);
      sum += o[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < x.cols; ++j) {
      o[j] *= inv;
    }
  }
  return out;
}

Matrix masked_row_softmax(const Matrix& x, const std::vector<std::uint8_t>& valid) {
  if (valid.size() != x.cols) {
    throw std::invalid_argument("mask length " + std::to_string(valid.size()) +
                                " does not match columns of " + x.shape_str());
  }
  bool any = false;
  for (std::uint8_t f : valid) {
    if (f) any = true;
  }
  if (!any) {
    throw std::invalid_argument("masked_row_softmax: no valid column");
  }
  Matrix shifted = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double* row = shifted.row_ptr(i);
    for (std::size_t j = 0; j < x.cols; ++j) {
      if (!valid[j]) row[j] += -1e9;
    }
  }
  return row_softmax(shifted);
}

Matrix softmax_backward(const Matrix& d_out, const Matrix& softmax_out) {
  if (!d_out.same_shape(softmax_out)) {
    throw std::invalid_argument("softmax_backward shape mismatch: " + d_out.shape_str() + " vs " +
                                softmax_out.shape_str());
  }
  Matrix dx(d_out.rows, d_out.cols);
  for (std::size_t i = 0; i < d_out.rows; ++i) {
    const double* dy = d_out.row_ptr(i);
    const double* y = softmax_out.row_ptr(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < d_out.cols; ++j) {
      dot += y[j] * dy[j];
    }
    double* o = dx.row_ptr(i);
    for (std::size_t j = 0; j < d_out.cols; ++j) {
      o[j] = y[j] * (dy[j] - dot);
    }
  }
  return dx;
}

double log_sum_exp(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t j = 1; j < n; ++j) {
    if (x[j] > m) m = x[j];
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum += std::exp(x[j] - m);
  }
  return m + std::log(sum);
}

Matrix init_xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("init_xavier needs positive dims, got " + shape_str(rows, cols));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix out(rows, cols);
  for (double& v : out.data) {
    v = rng.uniform(-bound, bound);
  }
  return out;
}

}  // namespace attnpool
