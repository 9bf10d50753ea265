#include "attnpool/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace attnpool {

AttentionBlockParams init_attention_block(Rng& rng, std::size_t d, std::size_t d_k,
                                          std::size_t d_ff) {
  AttentionBlockParams p;
  p.w_q = init_xavier(rng, d, d_k);
  p.w_k = init_xavier(rng, d, d_k);
  p.w_v = init_xavier(rng, d, d_k);
  p.w_o = init_xavier(rng, d_k, d);
  p.ln1_gain = Matrix(1, d, 1.0);
  p.ln1_bias = Matrix(1, d, 0.0);
  p.ff_w1 = init_xavier(rng, d, d_ff);
  p.ff_b1 = Matrix(1, d_ff, 0.0);
  p.ff_w2 = init_xavier(rng, d_ff, d);
  p.ff_b2 = Matrix(1, d, 0.0);
  p.ln2_gain = Matrix(1, d, 1.0);
  p.ln2_bias = Matrix(1, d, 0.0);
  return p;
}

AttentionBlockParams zeros_like(const AttentionBlockParams& p) {
  AttentionBlockParams z;
  z.w_q = Matrix(p.w_q.rows, p.w_q.cols);
  z.w_k = Matrix(p.w_k.rows, p.w_k.cols);
  z.w_v = Matrix(p.w_v.rows, p.w_v.cols);
  z.w_o = Matrix(p.w_o.rows, p.w_o.cols);
  z.ln1_gain = Matrix(1, p.ln1_gain.cols);
  z.ln1_bias = Matrix(1, p.ln1_bias.cols);
  z.ln2_gain = Matrix(1, p.ln2_gain.cols);
  z.ln2_bias = Matrix(1, p.ln2_bias.cols);
  z.ff_w1 = Matrix(p.ff_w1.rows, p.ff_w1.cols);
  z.ff_b1 = Matrix(1, p.ff_b1.cols);
  z.ff_w2 = Matrix(p.ff_w2.rows, p.ff_w2.cols);
  z.ff_b2 = Matrix(1, p.ff_b2.cols);
  return z;
}

EncoderParams zeros_like(const EncoderParams& p) {
  EncoderParams z;
  z.token_emb = Matrix(p.token_emb.rows, p.token_emb.cols);
  z.pos_emb = Matrix(p.pos_emb.rows, p.pos_emb.cols);
  z.blocks.reserve(p.blocks.size());
  for (const auto& b : p.blocks) z.blocks.push_back(zeros_like(b));
  return z;
}

Matrix attend(const Matrix& h, const AttentionBlockParams& block,
              const std::vector<std::uint8_t>& valid, AttendCache* cache) {
  if (h.cols != block.model_dim()) {
    throw std::invalid_argument("attend: H is " + h.shape_str() + " but block expects d=" +
                                std::to_string(block.model_dim()));
  }
  if (valid.size() != h.rows) {
    throw std::invalid_argument("attend: mask length " + std::to_string(valid.size()) +
                                " vs " + std::to_string(h.rows) + " rows");
  }
  Matrix q = matmul(h, block.w_q);
  Matrix k = matmul(h, block.w_k);
  Matrix v = matmul(h, block.w_v);
  Matrix scores = matmul(q, transpose(k));
  const double scale = 1.0 / std::sqrt(static_cast<double>(block.key_dim()));
  for (double& s : scores.data) s *= scale;
  Matrix attn = masked_row_softmax(scores, valid);
  Matrix av = matmul(attn, v);
  Matrix out = matmul(av, block.w_o);
  if (cache) {
    cache->h_in = h;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->av = std::move(av);
  }
  return out;
}

Matrix attend_backward(const Matrix& d_out, const AttentionBlockParams& block,
                       const AttendCache& cache, AttentionBlockParams& grads,
                       const Matrix* d_attn_extra) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(block.key_dim()));

  // out = av * w_o
  Matrix d_av, d_wo;
  matmul_backward(d_out, cache.av, block.w_o, d_av, d_wo);
  for (std::size_t i = 0; i < d_wo.size(); ++i) grads.w_o.data[i] += d_wo.data[i];

  // av = attn * v
  Matrix d_attn, d_v;
  matmul_backward(d_av, cache.attn, cache.v, d_attn, d_v);
  if (d_attn_extra) {
    if (!d_attn_extra->same_shape(d_attn)) {
      throw std::invalid_argument("attend_backward: extra attention gradient is " +
                                  d_attn_extra->shape_str() + ", expected " + d_attn.shape_str());
    }
    for (std::size_t i = 0; i < d_attn.size(); ++i) d_attn.data[i] += d_attn_extra->data[i];
  }

  // attn = softmax(scores); masked entries have attn == 0, so their score
  // gradient vanishes and the additive mask needs no special handling.
  Matrix d_scores = softmax_backward(d_attn, cache.attn);
  for (double& s : d_scores.data) s *= scale;

  // scores = q * k^T
  Matrix d_q = matmul(d_scores, cache.k);
  Matrix d_k = matmul(transpose(d_scores), cache.q);

  Matrix d_h(cache.h_in.rows, cache.h_in.cols);
  Matrix d_hq, d_wq;
  matmul_backward(d_q, cache.h_in, block.w_q, d_hq, d_wq);
  Matrix d_hk, d_wk;
  matmul_backward(d_k, cache.h_in, block.w_k, d_hk, d_wk);
  Matrix d_hv, d_wv;
  matmul_backward(d_v, cache.h_in, block.w_v, d_hv, d_wv);
  for (std::size_t i = 0; i < d_h.size(); ++i) {
    d_h.data[i] = d_hq.data[i] + d_hk.data[i] + d_hv.data[i];
  }
  for (std::size_t i = 0; i < d_wq.size(); ++i) grads.w_q.data[i] += d_wq.data[i];
  for (std::size_t i = 0; i < d_wk.size(); ++i) grads.w_k.data[i] += d_wk.data[i];
  for (std::size_t i = 0; i < d_wv.size(); ++i) grads.w_v.data[i] += d_wv.data[i];
  return d_h;
}

Matrix encoder_block(const Matrix& h, const AttentionBlockParams& block,
                     const std::vector<std::uint8_t>& valid, BlockCache* cache) {
  Matrix attn_out = attend(h, block, valid, cache ? &cache->att : nullptr);
  Matrix res1 = h;
  for (std::size_t i = 0; i < res1.size(); ++i) res1.data[i] += attn_out.data[i];
  Matrix h_mid = layer_norm(res1, block.ln1_gain, block.ln1_bias, cache ? &cache->ln1 : nullptr);

  Matrix ff_pre = add_bias(matmul(h_mid, block.ff_w1), block.ff_b1);
  Matrix ff_act = relu(ff_pre);
  Matrix ff_out = add_bias(matmul(ff_act, block.ff_w2), block.ff_b2);
  Matrix res2 = h_mid;
  for (std::size_t i = 0; i < res2.size(); ++i) res2.data[i] += ff_out.data[i];
  Matrix out = layer_norm(res2, block.ln2_gain, block.ln2_bias, cache ? &cache->ln2 : nullptr);
  if (cache) {
    cache->h_mid = std::move(h_mid);
    cache->ff_pre = std::move(ff_pre);
    cache->ff_act = std::move(ff_act);
  }
  return out;
}

Matrix encoder_block_backward(const Matrix& d_out, const AttentionBlockParams& block,
                              const BlockCache& cache, AttentionBlockParams& grads,
                              const Matrix* d_attn_extra) {
  // out = LN2(h_mid + ff_out)
  Matrix d_res2, d_g2, d_b2;
  layer_norm_backward(d_out, block.ln2_gain, cache.ln2, d_res2, d_g2, d_b2);
  for (std::size_t i = 0; i < d_g2.size(); ++i) grads.ln2_gain.data[i] += d_g2.data[i];
  for (std::size_t i = 0; i < d_b2.size(); ++i) grads.ln2_bias.data[i] += d_b2.data[i];

  // ff_out = relu(h_mid W1 + b1) W2 + b2
  Matrix d_ffb2 = add_bias_backward_bias(d_res2);
  for (std::size_t i = 0; i < d_ffb2.size(); ++i) grads.ff_b2.data[i] += d_ffb2.data[i];
  Matrix d_ff_act, d_w2;
  matmul_backward(d_res2, cache.ff_act, block.ff_w2, d_ff_act, d_w2);
  for (std::size_t i = 0; i < d_w2.size(); ++i) grads.ff_w2.data[i] += d_w2.data[i];
  Matrix d_ff_pre = relu_backward(d_ff_act, cache.ff_pre);
  Matrix d_ffb1 = add_bias_backward_bias(d_ff_pre);
  for (std::size_t i = 0; i < d_ffb1.size(); ++i) grads.ff_b1.data[i] += d_ffb1.data[i];
  Matrix d_h_mid, d_w1;
  matmul_backward(d_ff_pre, cache.h_mid, block.ff_w1, d_h_mid, d_w1);
  for (std::size_t i = 0; i < d_w1.size(); ++i) grads.ff_w1.data[i] += d_w1.data[i];

  // residual: h_mid feeds both the FF input and the second residual
  for (std::size_t i = 0; i < d_h_mid.size(); ++i) d_h_mid.data[i] += d_res2.data[i];

  // h_mid = LN1(h + attn_out)
  Matrix d_res1, d_g1, d_b1;
  layer_norm_backward(d_h_mid, block.ln1_gain, cache.ln1, d_res1, d_g1, d_b1);
  for (std::size_t i = 0; i < d_g1.size(); ++i) grads.ln1_gain.data[i] += d_g1.data[i];
  for (std::size_t i = 0; i < d_b1.size(); ++i) grads.ln1_bias.data[i] += d_b1.data[i];

  Matrix d_h = attend_backward(d_res1, block, cache.att, grads, d_attn_extra);
  for (std::size_t i = 0; i < d_h.size(); ++i) d_h.data[i] += d_res1.data[i];
  return d_h;
}

Matrix embed_trimmed(const EncodedExample& ex, const EncoderParams& params) {
  const std::size_t d = params.model_dim();
  const std::size_t n = static_cast<std::size_t>(ex.true_len);
  if (n < 1 || n > ex.ids.size()) {
    throw std::invalid_argument("embed_trimmed: true_len " + std::to_string(ex.true_len) +
                                " out of range for sequence of " + std::to_string(ex.ids.size()));
  }
  if (ex.ids.size() > params.max_len()) {
    throw std::invalid_argument("embed_trimmed: sequence length " + std::to_string(ex.ids.size()) +
                                " exceeds positional table " + std::to_string(params.max_len()));
  }
  Matrix h0(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const int id = ex.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size()) {
      throw std::out_of_range("embed_trimmed: token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(params.vocab_size()));
    }
    const double* tok = params.token_emb.row_ptr(static_cast<std::size_t>(id));
    const double* pos = params.pos_emb.row_ptr(i);
    double* out = h0.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) out[j] = tok[j] + pos[j];
  }
  return h0;
}

HiddenStates encode_sequence(const EncodedExample& ex, const EncoderParams& params) {
  const std::size_t d = params.model_dim();
  const std::size_t n_padded = ex.ids.size();
  const std::size_t n = static_cast<std::size_t>(ex.true_len);

  Matrix h = embed_trimmed(ex, params);
  std::vector<std::uint8_t> all_valid(n, 1);
  for (const AttentionBlockParams& block : params.blocks) {
    h = encoder_block(h, block, all_valid);
  }

  HiddenStates out;
  out.true_len = ex.true_len;
  out.valid.assign(n_padded, 0);
  for (std::size_t i = 0; i < n; ++i) out.valid[i] = 1;
  out.h = Matrix(n_padded, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = h.row_ptr(i);
    double* dst = out.h.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }
  // Pad rows keep their initial embeddings; downstream reads go through
  // the mask only.
  for (std::size_t i = n; i < n_padded; ++i) {
    const int id = ex.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size()) {
      throw std::out_of_range("encode_sequence: token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(params.vocab_size()));
    }
    const double* tok = params.token_emb.row_ptr(static_cast<std::size_t>(id));
    const double* pos = params.pos_emb.row_ptr(i);
    double* dst = out.h.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = tok[j] + pos[j];
  }
  return out;
}

}  // namespace attnpool
