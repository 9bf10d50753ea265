#pragma once

#include "attnpool/ingest.hpp"
#include "attnpool/kernels.hpp"
#include "attnpool/matrix.hpp"

namespace attnpool {

/// One self-attention block: single-head scaled dot-product attention with
/// an output projection, followed by a ReLU feed-forward, both wrapped in
/// post-norm residuals.
struct AttentionBlockParams {
  Matrix w_q, w_k, w_v;  // d x d_k
  Matrix w_o;            // d_k x d
  Matrix ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // 1 x d
  Matrix ff_w1;          // d x d_ff
  Matrix ff_b1;          // 1 x d_ff
  Matrix ff_w2;          // d_ff x d
  Matrix ff_b2;          // 1 x d

  std::size_t model_dim() const { return w_q.rows; }
  std::size_t key_dim() const { return w_q.cols; }
  std::size_t ff_dim() const { return ff_w1.cols; }
};

struct EncoderParams {
  Matrix token_emb;  // V x d
  Matrix pos_emb;    // max_len x d
  std::vector<AttentionBlockParams> blocks;

  std::size_t model_dim() const { return token_emb.cols; }
  std::size_t vocab_size() const { return token_emb.rows; }
  std::size_t max_len() const { return pos_emb.rows; }
};

/// Contextual states for one sequence. Rows at invalid positions carry the
/// untouched pad embeddings and must only be read through the mask.
struct HiddenStates {
  Matrix h;  // n_padded x d
  std::vector<std::uint8_t> valid;
  int true_len = 0;
};

struct AttendCache {
  Matrix h_in;
  Matrix q, k, v;
  Matrix attn;  // row-softmaxed weights, n x n
  Matrix av;    // attn * v
};

struct BlockCache {
  AttendCache att;
  LayerNormCache ln1;
  Matrix h_mid;   // output of the first layer norm
  Matrix ff_pre;  // h_mid * ff_w1 + ff_b1
  Matrix ff_act;  // relu(ff_pre)
  LayerNormCache ln2;
};

AttentionBlockParams init_attention_block(Rng& rng, std::size_t d, std::size_t d_k,
                                          std::size_t d_ff);

AttentionBlockParams zeros_like(const AttentionBlockParams& p);
EncoderParams zeros_like(const EncoderParams& p);

/// Scaled dot-product attention with an output projection:
///   Q = H W_Q, K = H W_K, V = H W_V
///   A = masked_row_softmax(Q K^T / sqrt(d_k))   (invalid key columns masked)
///   out = (A V) W_O
Matrix attend(const Matrix& h, const AttentionBlockParams& block,
              const std::vector<std::uint8_t>& valid, AttendCache* cache = nullptr);

/// Accumulates dH for the attention sublayer; parameter gradients add into
/// `grads`. `d_attn_extra`, when given, is an additional upstream gradient
/// on the attention weight matrix itself (used by the attention-row-mean
/// pooling variant).
Matrix attend_backward(const Matrix& d_out, const AttentionBlockParams& block,
                       const AttendCache& cache, AttentionBlockParams& grads,
                       const Matrix* d_attn_extra = nullptr);

/// Post-norm residual block:
///   h_mid = LN1(h + attend(h)); out = LN2(h_mid + FF(h_mid))
Matrix encoder_block(const Matrix& h, const AttentionBlockParams& block,
                     const std::vector<std::uint8_t>& valid, BlockCache* cache = nullptr);

Matrix encoder_block_backward(const Matrix& d_out, const AttentionBlockParams& block,
                              const BlockCache& cache, AttentionBlockParams& grads,
                              const Matrix* d_attn_extra = nullptr);

/// Token embedding + learned positional embedding for the first true_len
/// positions only (the trimmed matrix every training path runs on).
Matrix embed_trimmed(const EncodedExample& ex, const EncoderParams& params);

/// Full padded contract: H0[i] = token_emb[ids[i]] + pos_emb[i] for every
/// position, blocks applied under the validity mask. Because masked-out
/// keys get exactly zero weight, block outputs at valid rows equal the
/// trimmed computation; pad rows keep their initial embeddings.
HiddenStates encode_sequence(const EncodedExample& ex, const EncoderParams& params);

}  // namespace attnpool
