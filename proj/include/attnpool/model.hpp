#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attnpool/aggregate.hpp"
#include "attnpool/encoder.hpp"
#include "attnpool/ingest.hpp"

namespace attnpool {

/// Every knob of a training run. Architecture fields double as the encoder
/// construction recipe; key_dim/ff_dim of 0 derive from hidden_dim.
struct TrainConfig {
  std::size_t hidden_dim = 64;
  std::size_t key_dim = 0;  // 0 -> hidden_dim
  std::size_t ff_dim = 0;   // 0 -> 4 * hidden_dim
  std::size_t layers = 2;
  std::size_t max_len = 64;

  double alpha = 0.5;
  std::string beta_source = "query";
  bool learnable_alpha = false;

  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  std::uint64_t seed = 42;

  std::size_t effective_key_dim() const { return key_dim == 0 ? hidden_dim : key_dim; }
  std::size_t effective_ff_dim() const { return ff_dim == 0 ? 4 * hidden_dim : ff_dim; }
  void validate() const;
};

struct ClassifierParams {
  Matrix w_c;  // m x d
  Matrix b_c;  // 1 x m
  std::vector<std::string> category_names;

  std::size_t num_classes() const { return w_c.rows; }
};

struct ModelParams {
  EncoderParams encoder;
  AggregatorParams aggregator;
  ClassifierParams classifier;
  TrainConfig config;
  Vocabulary vocab;

  std::size_t num_classes() const { return classifier.num_classes(); }
};

struct ModelGrads {
  EncoderParams encoder;
  AggregatorGrads aggregator;
  Matrix w_c;
  Matrix b_c;
};

/// One named tensor of the model, optionally paired with its gradient.
/// enumerate_params fixes the canonical parameter order used by the
/// optimizer, the checkpoint manifest and the gradient checker.
struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
  Matrix* grad = nullptr;
};

ModelParams init_model(const TrainConfig& config, Vocabulary vocab,
                       std::vector<std::string> category_names, Rng& rng);
ModelGrads zeros_like(const ModelParams& params);
void zero_grads(ModelGrads& grads);

std::vector<ParamRef> enumerate_params(ModelParams& params, ModelGrads* grads);

/// Softmax(W_c z + b_c) through a max-shifted exponential; entries sum to 1.
std::vector<double> predict_proba(const TextVector& z, const ClassifierParams& classifier);

/// Cross entropy of the true category given raw logits, evaluated as
/// log_sum_exp(logits) - logits[label]. Never takes log of a stored
/// probability, so extreme logits stay finite.
double cross_entropy(const std::vector<double>& logits, int label);

/// Lowest index wins ties.
int argmax_lowest(const std::vector<double>& v);

struct ForwardCache {
  std::vector<BlockCache> blocks;
  Matrix h_final;  // trimmed true_len x d encoder output
  AggregateCache agg;
  std::vector<double> z;
  std::vector<double> logits;
  std::vector<double> probs;
  double loss = 0.0;
};

/// Full pipeline on one example (trimmed to true_len). Returns the loss.
double model_forward(const ModelParams& params, const EncodedExample& ex, ForwardCache& cache);

/// Accumulates parameter gradients of the cached forward pass.
void model_backward(const ModelParams& params, const EncodedExample& ex,
                    const ForwardCache& cache, ModelGrads& grads);

/// Inference-only probability vector for one example.
std::vector<double> predict_example(const ModelParams& params, const EncodedExample& ex);

}  // namespace attnpool
