#include "attnpool/model.hpp"

#include <cmath>
#include <stdexcept>

namespace attnpool {

void TrainConfig::validate() const {
  if (hidden_dim < 1) throw std::invalid_argument("config: hidden_dim must be >= 1");
  if (layers < 1) throw std::invalid_argument("config: layers must be >= 1");
  if (max_len < 1) throw std::invalid_argument("config: max_len must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("config: alpha must lie in [0,1]");
  if (lr <= 0.0) throw std::invalid_argument("config: lr must be > 0");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  beta_source_from_string(beta_source);
}

ModelParams init_model(const TrainConfig& config, Vocabulary vocab,
                       std::vector<std::string> category_names, Rng& rng) {
  config.validate();
  if (category_names.size() < 2) {
    throw std::invalid_argument("init_model: need at least 2 categories");
  }
  const std::size_t d = config.hidden_dim;
  const std::size_t d_k = config.effective_key_dim();
  const std::size_t d_ff = config.effective_ff_dim();
  const std::size_t m = category_names.size();

  ModelParams p;
  p.config = config;
  p.vocab = std::move(vocab);
  p.encoder.token_emb = init_xavier(rng, p.vocab.size(), d);
  p.encoder.pos_emb = init_xavier(rng, config.max_len, d);
  p.encoder.blocks.reserve(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) {
    p.encoder.blocks.push_back(init_attention_block(rng, d, d_k, d_ff));
  }
  p.aggregator = init_aggregator(rng, d, config.alpha, config.learnable_alpha,
                                 beta_source_from_string(config.beta_source));
  p.classifier.w_c = init_xavier(rng, m, d);
  p.classifier.b_c = Matrix(1, m);
  p.classifier.category_names = std::move(category_names);
  return p;
}

ModelGrads zeros_like(const ModelParams& params) {
  ModelGrads g;
  g.encoder = zeros_like(params.encoder);
  g.aggregator = zeros_like_grads(params.aggregator);
  g.w_c = Matrix(params.classifier.w_c.rows, params.classifier.w_c.cols);
  g.b_c = Matrix(1, params.classifier.b_c.cols);
  return g;
}

void zero_grads(ModelGrads& grads) {
  auto zero = [](Matrix& m) { std::fill(m.data.begin(), m.data.end(), 0.0); };
  zero(grads.encoder.token_emb);
  zero(grads.encoder.pos_emb);
  for (auto& b : grads.encoder.blocks) {
    zero(b.w_q);
    zero(b.w_k);
    zero(b.w_v);
    zero(b.w_o);
    zero(b.ln1_gain);
    zero(b.ln1_bias);
    zero(b.ln2_gain);
    zero(b.ln2_bias);
    zero(b.ff_w1);
    zero(b.ff_b1);
    zero(b.ff_w2);
    zero(b.ff_b2);
  }
  zero(grads.aggregator.pooling_query);
  zero(grads.aggregator.alpha_raw);
  zero(grads.w_c);
  zero(grads.b_c);
}

std::vector<ParamRef> enumerate_params(ModelParams& params, ModelGrads* grads) {
  std::vector<ParamRef> refs;
  auto add = [&](const std::string& name, Matrix& value, Matrix* grad) {
    refs.push_back(ParamRef{name, &value, grad});
  };
  add("encoder.token_emb", params.encoder.token_emb,
      grads ? &grads->encoder.token_emb : nullptr);
  add("encoder.pos_emb", params.encoder.pos_emb, grads ? &grads->encoder.pos_emb : nullptr);
  for (std::size_t l = 0; l < params.encoder.blocks.size(); ++l) {
    auto& b = params.encoder.blocks[l];
    AttentionBlockParams* gb = grads ? &grads->encoder.blocks[l] : nullptr;
    const std::string prefix = "encoder.block" + std::to_string(l) + ".";
    add(prefix + "w_q", b.w_q, gb ? &gb->w_q : nullptr);
    add(prefix + "w_k", b.w_k, gb ? &gb->w_k : nullptr);
    add(prefix + "w_v", b.w_v, gb ? &gb->w_v : nullptr);
    add(prefix + "w_o", b.w_o, gb ? &gb->w_o : nullptr);
    add(prefix + "ln1_gain", b.ln1_gain, gb ? &gb->ln1_gain : nullptr);
    add(prefix + "ln1_bias", b.ln1_bias, gb ? &gb->ln1_bias : nullptr);
    add(prefix + "ff_w1", b.ff_w1, gb ? &gb->ff_w1 : nullptr);
    add(prefix + "ff_b1", b.ff_b1, gb ? &gb->ff_b1 : nullptr);
    add(prefix + "ff_w2", b.ff_w2, gb ? &gb->ff_w2 : nullptr);
    add(prefix + "ff_b2", b.ff_b2, gb ? &gb->ff_b2 : nullptr);
    add(prefix + "ln2_gain", b.ln2_gain, gb ? &gb->ln2_gain : nullptr);
    add(prefix + "ln2_bias", b.ln2_bias, gb ? &gb->ln2_bias : nullptr);
  }
  add("aggregator.pooling_query", params.aggregator.pooling_query,
      grads ? &grads->aggregator.pooling_query : nullptr);
  if (params.aggregator.learnable_alpha) {
    add("aggregator.alpha_raw", params.aggregator.alpha_raw,
        grads ? &grads->aggregator.alpha_raw : nullptr);
  }
  add("classifier.w_c", params.classifier.w_c, grads ? &grads->w_c : nullptr);
  add("classifier.b_c", params.classifier.b_c, grads ? &grads->b_c : nullptr);
  return refs;
}

std::vector<double> predict_proba(const TextVector& z, const ClassifierParams& classifier) {
  const std::size_t d = classifier.w_c.cols;
  const std::size_t m = classifier.w_c.rows;
  if (z.z.size() != d) {
    throw std::invalid_argument("predict_proba: z has " + std::to_string(z.z.size()) +
                                " entries but W_c is " + classifier.w_c.shape_str());
  }
  std::vector<double> logits(m);
  for (std::size_t c = 0; c < m; ++c) {
    const double* row = classifier.w_c.row_ptr(c);
    double s = classifier.b_c.data[c];
    for (std::size_t j = 0; j < d; ++j) s += row[j] * z.z[j];
    logits[c] = s;
  }
  const double lse = log_sum_exp(logits.data(), m);
  std::vector<double> probs(m);
  for (std::size_t c = 0; c < m; ++c) probs[c] = std::exp(logits[c] - lse);
  return probs;
}

double cross_entropy(const std::vector<double>& logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                " outside 0.." + std::to_string(logits.size() - 1));
  }
  return log_sum_exp(logits.data(), logits.size()) - logits[static_cast<std::size_t>(label)];
}

int argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

namespace {

// Column means of the last block's attention matrix: the pooling
// distribution for the attn_rowmean variant. Rows of attn are on the
// simplex, so the column means are too.
std::vector<double> attn_row_mean(const Matrix& attn) {
  const std::size_t n = attn.rows;
  std::vector<double> beta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = attn.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) beta[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& b : beta) b *= inv;
  return beta;
}

}  // namespace

double model_forward(const ModelParams& params, const EncodedExample& ex, ForwardCache& cache) {
  const std::size_t n = static_cast<std::size_t>(ex.true_len);
  Matrix h = embed_trimmed(ex, params.encoder);
  std::vector<std::uint8_t> all_valid(n, 1);

  cache.blocks.resize(params.encoder.blocks.size());
  for (std::size_t l = 0; l < params.encoder.blocks.size(); ++l) {
    h = encoder_block(h, params.encoder.blocks[l], all_valid, &cache.blocks[l]);
  }
  cache.h_final = std::move(h);

  std::vector<double> beta_ext;
  const std::vector<double>* beta_ptr = nullptr;
  if (params.aggregator.beta_source == BetaSource::kAttnRowMean) {
    beta_ext = attn_row_mean(cache.blocks.back().att.attn);
    beta_ptr = &beta_ext;
  }
  cache.z = aggregate_forward(cache.h_final, params.aggregator, beta_ptr, &cache.agg);

  const std::size_t m = params.num_classes();
  const std::size_t d = params.config.hidden_dim;
  cache.logits.assign(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    const double* row = params.classifier.w_c.row_ptr(c);
    double s = params.classifier.b_c.data[c];
    for (std::size_t j = 0; j < d; ++j) s += row[j] * cache.z[j];
    cache.logits[c] = s;
  }
  const double lse = log_sum_exp(cache.logits.data(), m);
  cache.probs.assign(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) cache.probs[c] = std::exp(cache.logits[c] - lse);
  if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= m) {
    throw std::invalid_argument("model_forward: label " + std::to_string(ex.label) +
                                " outside model categories m=" + std::to_string(m));
  }
  cache.loss = lse - cache.logits[static_cast<std::size_t>(ex.label)];
  return cache.loss;
}

void model_backward(const ModelParams& params, const EncodedExample& ex,
                    const ForwardCache& cache, ModelGrads& grads) {
  const std::size_t m = params.num_classes();
  const std::size_t d = params.config.hidden_dim;
  const std::size_t n = static_cast<std::size_t>(ex.true_len);

  // d loss / d logits = p - onehot(label)
  std::vector<double> d_logits = cache.probs;
  d_logits[static_cast<std::size_t>(ex.label)] -= 1.0;

  std::vector<double> d_z(d, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    const double g = d_logits[c];
    const double* wrow = params.classifier.w_c.row_ptr(c);
    double* gw = grads.w_c.row_ptr(c);
    for (std::size_t j = 0; j < d; ++j) {
      gw[j] += g * cache.z[j];
      d_z[j] += g * wrow[j];
    }
    grads.b_c.data[c] += g;
  }

  std::vector<double> d_beta;
  Matrix d_h = aggregate_backward(
      d_z, cache.h_final, params.aggregator, cache.agg, grads.aggregator,
      params.aggregator.beta_source == BetaSource::kAttnRowMean ? &d_beta : nullptr);

  Matrix d_attn_extra;
  const bool rowmean = params.aggregator.beta_source == BetaSource::kAttnRowMean;
  if (rowmean) {
    // beta_j = (1/n) sum_i attn(i,j)
    d_attn_extra = Matrix(n, n);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = d_attn_extra.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) row[j] = d_beta[j] * inv;
    }
  }

  for (std::size_t l = params.encoder.blocks.size(); l-- > 0;) {
    const bool last = (l + 1 == params.encoder.blocks.size());
    d_h = encoder_block_backward(d_h, params.encoder.blocks[l], cache.blocks[l],
                                 grads.encoder.blocks[l],
                                 (rowmean && last) ? &d_attn_extra : nullptr);
  }

  // d_h is now the gradient of H0 = token_emb[ids] + pos_emb
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = d_h.row_ptr(i);
    double* tok = grads.encoder.token_emb.row_ptr(static_cast<std::size_t>(ex.ids[i]));
    double* pos = grads.encoder.pos_emb.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      tok[j] += src[j];
      pos[j] += src[j];
    }
  }
}

std::vector<double> predict_example(const ModelParams& params, const EncodedExample& ex) {
  ForwardCache cache;
  const std::size_t n = static_cast<std::size_t>(ex.true_len);
  Matrix h = embed_trimmed(ex, params.encoder);
  std::vector<std::uint8_t> all_valid(n, 1);
  cache.blocks.resize(params.encoder.blocks.size());
  for (std::size_t l = 0; l < params.encoder.blocks.size(); ++l) {
    h = encoder_block(h, params.encoder.blocks[l], all_valid, &cache.blocks[l]);
  }
  std::vector<double> beta_ext;
  const std::vector<double>* beta_ptr = nullptr;
  if (params.aggregator.beta_source == BetaSource::kAttnRowMean) {
    const Matrix& attn = cache.blocks.back().att.attn;
    beta_ext.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = attn.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) beta_ext[j] += row[j];
    }
    for (double& b : beta_ext) b /= static_cast<double>(n);
    beta_ptr = &beta_ext;
  }
  TextVector z;
  z.z = aggregate_forward(h, params.aggregator, beta_ptr, nullptr);
  return predict_proba(z, params.classifier);
}

}  // namespace attnpool
