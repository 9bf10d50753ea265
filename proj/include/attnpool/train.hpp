#pragma once

#include "attnpool/model.hpp"

namespace attnpool {

/// Adam with bias correction. State tensors follow the canonical
/// enumerate_params order, so updates are deterministic.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1, double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void init(const std::vector<ParamRef>& params);
  void step(const std::vector<ParamRef>& params);

  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

/// Seeded end-to-end training: parameter init, one shuffle per epoch,
/// batch-mean gradients, Adam updates. Identical inputs give bitwise
/// identical parameters and loss history. A non-finite batch loss aborts
/// with an error naming the batch.
TrainResult train(const DatasetSplit& data, const TrainConfig& config, Vocabulary vocab,
                  std::vector<std::string> category_names);

/// Fisher-Yates over [0,n) driven by rng.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace attnpool
