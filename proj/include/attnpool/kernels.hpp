#pragma once

#include "attnpool/matrix.hpp"

namespace attnpool {

constexpr double kLayerNormEps = 1e-5;

Matrix relu(const Matrix& x);

/// dx = d_out where x > 0, else 0.
Matrix relu_backward(const Matrix& d_out, const Matrix& x);

/// Row-broadcast bias add; bias is 1 x cols.
Matrix add_bias(const Matrix& x, const Matrix& bias);

/// d_bias = column sums of d_out (rows ascending); d_x is d_out unchanged.
Matrix add_bias_backward_bias(const Matrix& d_out);

/// Cached forward values needed by layer_norm_backward.
struct LayerNormCache {
  Matrix xhat;                  // normalized input, same shape as x
  std::vector<double> inv_std;  // one per row
};

/// Per-row normalization: y = gain .* (x - mean) / sqrt(var + eps) + bias.
/// gain and bias are 1 x cols. var is the biased (divide-by-cols) variance.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache* cache);

void layer_norm_backward(const Matrix& d_out, const Matrix& gain, const LayerNormCache& cache,
                         Matrix& d_x, Matrix& d_gain, Matrix& d_bias);

}  // namespace attnpool
