#include "attnpool/aggregate.hpp"

#include <cmath>
#include <stdexcept>

namespace attnpool {

BetaSource beta_source_from_string(const std::string& s) {
  if (s == "query") return BetaSource::kQuery;
  if (s == "attn_rowmean") return BetaSource::kAttnRowMean;
  throw std::invalid_argument("unknown beta_source '" + s + "' (expected query|attn_rowmean)");
}

std::string to_string(BetaSource s) {
  return s == BetaSource::kQuery ? "query" : "attn_rowmean";
}

double AggregatorParams::effective_alpha() const {
  if (!learnable_alpha) return alpha;
  return 1.0 / (1.0 + std::exp(-alpha_raw(0, 0)));
}

AggregatorParams init_aggregator(Rng& rng, std::size_t d, double alpha, bool learnable_alpha,
                                 BetaSource source) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("alpha must lie in [0,1], got " + std::to_string(alpha));
  }
  AggregatorParams p;
  p.alpha = alpha;
  p.learnable_alpha = learnable_alpha;
  p.beta_source = source;
  p.pooling_query = init_xavier(rng, 1, d);
  p.alpha_raw = Matrix(1, 1);
  if (learnable_alpha) {
    const double a = std::min(std::max(alpha, 1e-6), 1.0 - 1e-6);
    p.alpha_raw(0, 0) = std::log(a / (1.0 - a));
  }
  return p;
}

AggregatorGrads zeros_like_grads(const AggregatorParams& p) {
  AggregatorGrads g;
  g.pooling_query = Matrix(1, p.pooling_query.cols);
  g.alpha_raw = Matrix(1, 1);
  return g;
}

namespace {

std::size_t count_valid(const std::vector<std::uint8_t>& valid) {
  std::size_t n = 0;
  for (std::uint8_t f : valid) n += f ? 1 : 0;
  return n;
}

}  // namespace

PoolingWeights pooling_weights(const HiddenStates& hs, const AggregatorParams& params) {
  const std::size_t d = hs.h.cols;
  if (params.pooling_query.cols != d) {
    throw std::invalid_argument("pooling_weights: query is " + params.pooling_query.shape_str() +
                                " but H is " + hs.h.shape_str());
  }
  if (count_valid(hs.valid) == 0) {
    throw std::invalid_argument("pooling_weights: no valid position");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix scores(1, hs.h.rows);
  for (std::size_t i = 0; i < hs.h.rows; ++i) {
    const double* row = hs.h.row_ptr(i);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += row[j] * params.pooling_query.data[j];
    scores(0, i) = s * scale;
  }
  Matrix soft = masked_row_softmax(scores, hs.valid);
  PoolingWeights w;
  for (std::size_t i = 0; i < hs.valid.size(); ++i) {
    if (hs.valid[i]) w.beta.push_back(soft(0, i));
  }
  return w;
}

TextVector aggregate(const HiddenStates& hs, const PoolingWeights& weights, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("aggregate: alpha must lie in [0,1]");
  }
  const std::size_t d = hs.h.cols;
  std::vector<std::size_t> valid_rows;
  for (std::size_t i = 0; i < hs.valid.size(); ++i) {
    if (hs.valid[i]) valid_rows.push_back(i);
  }
  if (valid_rows.empty()) {
    throw std::invalid_argument("aggregate: no valid position");
  }
  if (weights.beta.size() != valid_rows.size()) {
    throw std::invalid_argument("aggregate: beta has " + std::to_string(weights.beta.size()) +
                                " entries for " + std::to_string(valid_rows.size()) +
                                " valid positions");
  }
  const double inv_n = 1.0 / static_cast<double>(valid_rows.size());
  TextVector out;
  out.z.assign(d, 0.0);
  std::vector<double> mean_vec(d, 0.0), attn_vec(d, 0.0);
  for (std::size_t vi = 0; vi < valid_rows.size(); ++vi) {
    const double* row = hs.h.row_ptr(valid_rows[vi]);
    const double b = weights.beta[vi];
    for (std::size_t j = 0; j < d; ++j) {
      mean_vec[j] += row[j];
      attn_vec[j] += b * row[j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    out.z[j] = alpha * (mean_vec[j] * inv_n) + (1.0 - alpha) * attn_vec[j];
  }
  return out;
}

std::vector<double> aggregate_forward(const Matrix& h, const AggregatorParams& params,
                                      const std::vector<double>* beta_external,
                                      AggregateCache* cache) {
  const std::size_t n = h.rows;
  const std::size_t d = h.cols;
  if (n == 0) throw std::invalid_argument("aggregate_forward: empty H");

  std::vector<double> beta;
  if (params.beta_source == BetaSource::kAttnRowMean) {
    if (!beta_external || beta_external->size() != n) {
      throw std::invalid_argument("aggregate_forward: attn_rowmean mode needs external beta");
    }
    beta = *beta_external;
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix scores(1, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = h.row_ptr(i);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += row[j] * params.pooling_query.data[j];
      scores(0, i) = s * scale;
    }
    Matrix soft = row_softmax(scores);
    beta.assign(soft.data.begin(), soft.data.end());
  }

  const double alpha = params.effective_alpha();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> mean_vec(d, 0.0), attn_vec(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = h.row_ptr(i);
    const double b = beta[i];
    for (std::size_t j = 0; j < d; ++j) {
      mean_vec[j] += row[j];
      attn_vec[j] += b * row[j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) mean_vec[j] *= inv_n;

  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) {
    z[j] = alpha * mean_vec[j] + (1.0 - alpha) * attn_vec[j];
  }
  if (cache) {
    cache->beta = std::move(beta);
    cache->mean_vec = std::move(mean_vec);
    cache->attn_vec = std::move(attn_vec);
    cache->alpha = alpha;
  }
  return z;
}

Matrix aggregate_backward(const std::vector<double>& d_z, const Matrix& h,
                          const AggregatorParams& params, const AggregateCache& cache,
                          AggregatorGrads& grads, std::vector<double>* d_beta_external) {
  const std::size_t n = h.rows;
  const std::size_t d = h.cols;
  const double alpha = cache.alpha;
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix d_h(n, d);
  std::vector<double> d_beta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = h.row_ptr(i);
    double* dh = d_h.row_ptr(i);
    const double b = cache.beta[i];
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dh[j] = alpha * inv_n * d_z[j] + (1.0 - alpha) * b * d_z[j];
      dot += row[j] * d_z[j];
    }
    d_beta[i] = (1.0 - alpha) * dot;
  }

  if (params.learnable_alpha) {
    double d_alpha = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      d_alpha += d_z[j] * (cache.mean_vec[j] - cache.attn_vec[j]);
    }
    grads.alpha_raw(0, 0) += d_alpha * alpha * (1.0 - alpha);
  }

  if (params.beta_source == BetaSource::kAttnRowMean) {
    if (!d_beta_external) {
      throw std::invalid_argument("aggregate_backward: attn_rowmean mode needs d_beta output");
    }
    *d_beta_external = std::move(d_beta);
    return d_h;
  }

  // beta = softmax(h u / sqrt(d))
  Matrix beta_row(1, n);
  for (std::size_t i = 0; i < n; ++i) beta_row(0, i) = cache.beta[i];
  Matrix d_beta_row(1, n);
  for (std::size_t i = 0; i < n; ++i) d_beta_row(0, i) = d_beta[i];
  Matrix d_scores = softmax_backward(d_beta_row, beta_row);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = d_scores(0, i) * scale;
    const double* row = h.row_ptr(i);
    double* dh = d_h.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      dh[j] += ds * params.pooling_query.data[j];
      grads.pooling_query.data[j] += ds * row[j];
    }
  }
  return d_h;
}

}  // namespace attnpool
