#include "attnpool/train.hpp"

#include <cmath>
#include <stdexcept>

namespace attnpool {

void AdamOptimizer::init(const std::vector<ParamRef>& params) {
  m_.clear();
  v_.clear();
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamRef& p : params) {
    m_.emplace_back(p.value->rows, p.value->cols);
    v_.emplace_back(p.value->rows, p.value->cols);
  }
  t_ = 0;
}

void AdamOptimizer::step(const std::vector<ParamRef>& params) {
  if (params.size() != m_.size()) {
    throw std::invalid_argument("AdamOptimizer: parameter list changed size");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = *params[p].value;
    const Matrix& grad = *params[p].grad;
    Matrix& m = m_[p];
    Matrix& v = v_[p];
    for (std::size_t i = 0; i < value.data.size(); ++i) {
      const double g = grad.data[i];
      m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g;
      v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      value.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

TrainResult train(const DatasetSplit& data, const TrainConfig& config, Vocabulary vocab,
                  std::vector<std::string> category_names) {
  config.validate();
  if (data.examples.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }

  Rng rng(config.seed);
  TrainResult result;
  result.params = init_model(config, std::move(vocab), std::move(category_names), rng);
  ModelGrads grads = zeros_like(result.params);
  std::vector<ParamRef> refs = enumerate_params(result.params, &grads);

  AdamOptimizer opt(config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
  opt.init(refs);

  const std::size_t n = data.examples.size();
  ForwardCache cache;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(n, rng);
    double epoch_loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(start + config.batch_size, n);
      const std::size_t batch_count = end - start;
      zero_grads(grads);
      double batch_loss_sum = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const EncodedExample& ex = data.examples[order[k]];
        batch_loss_sum += model_forward(result.params, ex, cache);
        model_backward(result.params, ex, cache, grads);
      }
      if (!std::isfinite(batch_loss_sum)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(batch_index));
      }
      const double inv_b = 1.0 / static_cast<double>(batch_count);
      for (const ParamRef& r : refs) {
        for (double& g : r.grad->data) g *= inv_b;
      }
      opt.step(refs);
      epoch_loss_sum += batch_loss_sum;
    }
    result.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(n));
  }
  return result;
}

}  // namespace attnpool
