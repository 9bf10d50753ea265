#pragma once

#include "attnpool/encoder.hpp"
#include "attnpool/matrix.hpp"

namespace attnpool {

/// Where the pooling distribution comes from: a learned query attending
/// over the hidden states (default), or the row mean of the last encoder
/// block's attention matrix.
enum class BetaSource { kQuery, kAttnRowMean };

BetaSource beta_source_from_string(const std::string& s);
std::string to_string(BetaSource s);

struct AggregatorParams {
  double alpha = 0.5;  // balance coefficient in [0,1], used when not learnable
  bool learnable_alpha = false;
  Matrix alpha_raw;      // 1x1; alpha = sigmoid(alpha_raw) when learnable
  BetaSource beta_source = BetaSource::kQuery;
  Matrix pooling_query;  // 1 x d

  double effective_alpha() const;
};

struct AggregatorGrads {
  Matrix pooling_query;
  Matrix alpha_raw;  // 1x1, only meaningful when learnable_alpha
};

struct PoolingWeights {
  std::vector<double> beta;  // over valid positions; nonnegative, sums to 1
};

struct TextVector {
  std::vector<double> z;
};

AggregatorParams init_aggregator(Rng& rng, std::size_t d, double alpha, bool learnable_alpha,
                                 BetaSource source);
AggregatorGrads zeros_like_grads(const AggregatorParams& p);

/// beta = masked softmax(H u / sqrt(d)) over valid positions (the learned
/// single-query attention). Throws if no position is valid.
PoolingWeights pooling_weights(const HiddenStates& hs, const AggregatorParams& params);

/// z = alpha * (1/n) sum h_i + (1 - alpha) * sum beta_i h_i, valid rows
/// only; n is the number of valid positions, never the padded length.
TextVector aggregate(const HiddenStates& hs, const PoolingWeights& weights, double alpha);

struct AggregateCache {
  std::vector<double> beta;
  std::vector<double> mean_vec;
  std::vector<double> attn_vec;
  double alpha = 0.0;
};

/// Trimmed-path forward used in training: every row of h is valid.
/// In kAttnRowMean mode the caller supplies beta (from the attention
/// matrix); in kQuery mode it is derived from the pooling query.
std::vector<double> aggregate_forward(const Matrix& h, const AggregatorParams& params,
                                      const std::vector<double>* beta_external,
                                      AggregateCache* cache);

/// Returns dH. Parameter gradients accumulate into grads. In kAttnRowMean
/// mode the beta gradient is written to d_beta_external for the caller to
/// route into the attention matrix.
Matrix aggregate_backward(const std::vector<double>& d_z, const Matrix& h,
                          const AggregatorParams& params, const AggregateCache& cache,
                          AggregatorGrads& grads, std::vector<double>* d_beta_external);

}  // namespace attnpool
