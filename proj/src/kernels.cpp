#include "attnpool/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace attnpool {

Matrix relu(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data) {
    if (v < 0.0) v = 0.0;
  }
  return out;
}

Matrix relu_backward(const Matrix& d_out, const Matrix& x) {
  if (!d_out.same_shape(x)) {
    throw std::invalid_argument("relu_backward shape mismatch: " + d_out.shape_str() + " vs " +
                                x.shape_str());
  }
  Matrix dx(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    dx.data[i] = x.data[i] > 0.0 ? d_out.data[i] : 0.0;
  }
  return dx;
}

Matrix add_bias(const Matrix& x, const Matrix& bias) {
  if (bias.rows != 1 || bias.cols != x.cols) {
    throw std::invalid_argument("add_bias shape mismatch: x=" + x.shape_str() +
                                " bias=" + bias.shape_str());
  }
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double* row = out.row_ptr(i);
    for (std::size_t j = 0; j < x.cols; ++j) {
      row[j] += bias.data[j];
    }
  }
  return out;
}

Matrix add_bias_backward_bias(const Matrix& d_out) {
  Matrix db(1, d_out.cols);
  for (std::size_t i = 0; i < d_out.rows; ++i) {
    const double* row = d_out.row_ptr(i);
    for (std::size_t j = 0; j < d_out.cols; ++j) {
      db.data[j] += row[j];
    }
  }
  return db;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache* cache) {
  if (gain.rows != 1 || gain.cols != x.cols || bias.rows != 1 || bias.cols != x.cols) {
    throw std::invalid_argument("layer_norm shape mismatch: x=" + x.shape_str() + " gain=" +
                                gain.shape_str() + " bias=" + bias.shape_str());
  }
  const std::size_t d = x.cols;
  Matrix out(x.rows, d);
  Matrix xhat(x.rows, d);
  std::vector<double> inv_std(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* in = x.row_ptr(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += in[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = in[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[i] = inv;
    double* xh = xhat.row_ptr(i);
    double* o = out.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      xh[j] = (in[j] - mean) * inv;
      o[j] = gain.data[j] * xh[j] + bias.data[j];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

void layer_norm_backward(const Matrix& d_out, const Matrix& gain, const LayerNormCache& cache,
                         Matrix& d_x, Matrix& d_gain, Matrix& d_bias) {
  const Matrix& xhat = cache.xhat;
  if (!d_out.same_shape(xhat)) {
    throw std::invalid_argument("layer_norm_backward shape mismatch: " + d_out.shape_str() +
                                " vs " + xhat.shape_str());
  }
  const std::size_t d = d_out.cols;
  d_x = Matrix(d_out.rows, d);
  d_gain = Matrix(1, d);
  d_bias = Matrix(1, d);
  for (std::size_t i = 0; i < d_out.rows; ++i) {
    const double* dy = d_out.row_ptr(i);
    const double* xh = xhat.row_ptr(i);
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      d_gain.data[j] += dy[j] * xh[j];
      d_bias.data[j] += dy[j];
      const double dxh = dy[j] * gain.data[j];
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * xh[j];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    double* dx = d_x.row_ptr(i);
    const double inv = cache.inv_std[i];
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy[j] * gain.data[j];
      dx[j] = inv * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
    }
  }
}

}  // namespace attnpool
