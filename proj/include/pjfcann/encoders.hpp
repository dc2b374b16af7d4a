// Recurrent text encoders.
//
// The document encoder is a two-level (word -> sentence -> document) stack of
// bidirectional gated recurrent layers with attention pooling at each level,
// followed by a linear projection to the model width d. It stands in for a
// multi-granularity hierarchical RNN and keeps the same contract: token
// matrix in, one d-dimensional vector out.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "pjfcann/ops.hpp"
#include "pjfcann/parameter.hpp"
#include "pjfcann/text.hpp"

namespace pjfcann {

/// embed: [batch x max_len] indices -> [batch x max_len x d_w]. Padding
/// (index 0) maps to a zero vector regardless of the table's row 0.
inline Var embed(Tape& tape, const SentenceBatch& batch, Parameter& table) {
  Var t = tape.param(table);
  const std::size_t dim = table.value.cols();
  for (std::size_t i = 0; i < batch.batch(); ++i) {
    if (batch.lengths[i] > batch.max_len) {
      throw std::invalid_argument("embed: length exceeds max_len");
    }
  }
  Var rows = ops::gather_rows(t, batch.tokens, /*zero_index_is_padding=*/true);
  return ops::reshape(rows, {batch.batch(), batch.max_len, dim});
}

/// Update/reset-gate recurrent cell weights.
struct GruParams {
  Parameter* w_z = nullptr;
  Parameter* u_z = nullptr;
  Parameter* b_z = nullptr;
  Parameter* w_r = nullptr;
  Parameter* u_r = nullptr;
  Parameter* b_r = nullptr;
  Parameter* w_h = nullptr;
  Parameter* u_h = nullptr;
  Parameter* b_h = nullptr;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  static GruParams create(ParameterStore& store, const std::string& prefix,
                          std::size_t input_dim, std::size_t hidden_dim,
                          double stddev, std::mt19937_64& rng) {
    GruParams g;
    g.input_dim = input_dim;
    g.hidden_dim = hidden_dim;
    auto w = [&](const char* n) {
      return &store.add_gaussian(prefix + "." + n, {hidden_dim, input_dim},
                                 stddev, rng);
    };
    auto u = [&](const char* n) {
      return &store.add_gaussian(prefix + "." + n, {hidden_dim, hidden_dim},
                                 stddev, rng);
    };
    auto b = [&](const char* n) {
      return &store.add_gaussian(prefix + "." + n, {hidden_dim}, stddev, rng);
    };
    g.w_z = w("W_z");
    g.u_z = u("U_z");
    g.b_z = b("b_z");
    g.w_r = w("W_r");
    g.u_r = u("U_r");
    g.b_r = b("b_r");
    g.w_h = w("W_h");
    g.u_h = u("U_h");
    g.b_h = b("b_h");
    return g;
  }
};

/// One direction over the first `length` rows of x [len x in]. Returns the
/// hidden state after each consumed step, in sequence order.
inline std::vector<Var> gru_run(Tape& tape, Var x, std::size_t length,
                                const GruParams& p, bool reverse) {
  Var xz = ops::linear(x, tape.param(*p.w_z), tape.param(*p.b_z));
  Var xr = ops::linear(x, tape.param(*p.w_r), tape.param(*p.b_r));
  Var xh = ops::linear(x, tape.param(*p.w_h), tape.param(*p.b_h));
  Var uz = tape.param(*p.u_z);
  Var ur = tape.param(*p.u_r);
  Var uh = tape.param(*p.u_h);
  Var h = tape.constant(Tensor({p.hidden_dim}));
  std::vector<Var> states(length);
  for (std::size_t s = 0; s < length; ++s) {
    const std::size_t t = reverse ? length - 1 - s : s;
    Var z = ops::sigmoid(ops::add(ops::row(xz, t), ops::matmul(uz, h)));
    Var r = ops::sigmoid(ops::add(ops::row(xr, t), ops::matmul(ur, h)));
    Var c = ops::tanh(
        ops::add(ops::row(xh, t), ops::matmul(uh, ops::mul(r, h))));
    h = ops::gated_blend(z, h, c);
    states[t] = h;
  }
  return states;
}

/// Forward and backward passes over x [max_len x in] with true length
/// `length`, concatenated per step into [max_len x 2h]. Past the true length
/// the forward state stays frozen at its last value and the backward state at
/// its initial zero, so padding never alters the real steps.
inline Var gru_encode_bidirectional(Tape& tape, Var x, std::size_t length,
                                    const GruParams& forward,
                                    const GruParams& backward) {
  const Shape& s = x.shape();
  if (s.size() != 2 || s[1] != forward.input_dim ||
      s[1] != backward.input_dim) {
    throw ShapeError("gru_encode_bidirectional: input " + shape_string(s) +
                     " does not match input width " +
                     std::to_string(forward.input_dim));
  }
  if (length == 0) {
    throw std::invalid_argument("gru_encode_bidirectional: empty sequence");
  }
  if (length > s[0]) {
    throw std::invalid_argument("gru_encode_bidirectional: length " +
                                std::to_string(length) + " exceeds " +
                                std::to_string(s[0]) + " rows");
  }
  std::vector<Var> fw = gru_run(tape, x, length, forward, false);
  std::vector<Var> bw = gru_run(tape, x, length, backward, true);
  std::vector<Var> rows;
  rows.reserve(s[0]);
  for (std::size_t t = 0; t < length; ++t) rows.push_back(ops::concat({fw[t], bw[t]}));
  if (length < s[0]) {
    Var frozen = ops::concat(
        {fw[length - 1], tape.constant(Tensor({backward.hidden_dim}))});
    for (std::size_t t = length; t < s[0]; ++t) rows.push_back(frozen);
  }
  return ops::stack(rows);
}

struct AttentionParams {
  Parameter* w = nullptr;  // [a x k]
  Parameter* v = nullptr;  // [a]

  static AttentionParams create(ParameterStore& store,
                                const std::string& prefix, std::size_t width,
                                double stddev, std::mt19937_64& rng) {
    return {&store.add_gaussian(prefix + ".W", {width, width}, stddev, rng),
            &store.add_gaussian(prefix + ".v", {width}, stddev, rng)};
  }
};

struct PooledOutput {
  Var vector;   // [k]
  Var weights;  // [length]
};

/// Softmax over the first `length` rows of vᵀ tanh(W · state), then the
/// weighted sum of those rows.
inline PooledOutput attention_pool(Tape& tape, Var states, std::size_t length,
                                   const AttentionParams& p) {
  const Shape& s = states.shape();
  if (s.size() != 2) {
    throw ShapeError("attention_pool: needs [len x k], got " +
                     shape_string(s));
  }
  if (length == 0) {
    throw std::invalid_argument("attention_pool: every step is masked");
  }
  if (length > s[0]) {
    throw std::invalid_argument("attention_pool: length exceeds rows");
  }
  Var live = states;
  if (length < s[0]) {
    std::vector<std::size_t> idx(length);
    for (std::size_t i = 0; i < length; ++i) idx[i] = i;
    live = ops::gather_rows(states, idx);
  }
  Var scores = ops::matmul(ops::tanh(ops::linear(live, tape.param(*p.w))),
                           tape.param(*p.v));
  Var weights = ops::softmax(scores);
  return {ops::matmul(weights, live), weights};
}

struct DocumentEncoderConfig {
  std::size_t word_dim = 16;
  std::size_t hidden_dim = 32;  // per direction
  std::size_t output_dim = 200;
};

/// Hierarchical document encoder. A document is a list of tokenised
/// sentences; the output is one vector of width output_dim.
class DocumentEncoder {
 public:
  DocumentEncoder() = default;
  DocumentEncoder(ParameterStore& store, const std::string& prefix,
                  Parameter& embeddings, const DocumentEncoderConfig& config,
                  double stddev, std::mt19937_64& rng)
      : config_(config), embeddings_(&embeddings) {
    const std::size_t h = config.hidden_dim;
    word_fw_ = GruParams::create(store, prefix + ".word.fw", config.word_dim,
                                 h, stddev, rng);
    word_bw_ = GruParams::create(store, prefix + ".word.bw", config.word_dim,
                                 h, stddev, rng);
    word_attn_ = AttentionParams::create(store, prefix + ".word.attn", 2 * h,
                                         stddev, rng);
    sent_fw_ = GruParams::create(store, prefix + ".sent.fw", 2 * h, h, stddev,
                                 rng);
    sent_bw_ = GruParams::create(store, prefix + ".sent.bw", 2 * h, h, stddev,
                                 rng);
    sent_attn_ = AttentionParams::create(store, prefix + ".sent.attn", 2 * h,
                                         stddev, rng);
    proj_w_ = &store.add_gaussian(prefix + ".proj.W", {config.output_dim, 2 * h},
                                  stddev, rng);
    proj_b_ = &store.add_gaussian(prefix + ".proj.b", {config.output_dim},
                                  stddev, rng);
  }

  const DocumentEncoderConfig& config() const { return config_; }

  /// Pooled word-level vector [2h] for each sentence of the batch.
  std::vector<Var> encode_sentences(Tape& tape,
                                    const SentenceBatch& batch) const {
    Var embedded = embed(tape, batch, *embeddings_);
    std::vector<Var> out;
    for (std::size_t i = 0; i < batch.batch(); ++i) {
      Var states = gru_encode_bidirectional(tape, ops::row(embedded, i),
                                            batch.lengths[i], word_fw_,
                                            word_bw_);
      out.push_back(
          attention_pool(tape, states, batch.lengths[i], word_attn_).vector);
    }
    return out;
  }

  /// Sentence vectors -> sentence-level recurrent pass -> attention pool ->
  /// projection to output_dim.
  Var encode(Tape& tape, const std::vector<std::vector<std::size_t>>& sentences,
             Var* sentence_weights = nullptr) const {
    std::vector<std::vector<std::size_t>> nonempty;
    for (const auto& s : sentences)
      if (!s.empty()) nonempty.push_back(s);
    if (nonempty.empty()) {
      throw std::invalid_argument("encode_document: empty document");
    }
    std::vector<Var> sent = encode_sentences(tape, SentenceBatch::from(nonempty));
    Var seq = ops::stack(sent);
    Var states = gru_encode_bidirectional(tape, seq, sent.size(), sent_fw_,
                                          sent_bw_);
    PooledOutput pooled = attention_pool(tape, states, sent.size(), sent_attn_);
    if (sentence_weights) *sentence_weights = pooled.weights;
    return ops::linear(pooled.vector, tape.param(*proj_w_),
                       tape.param(*proj_b_));
  }

  const GruParams& word_forward() const { return word_fw_; }
  const GruParams& word_backward() const { return word_bw_; }
  const GruParams& sentence_forward() const { return sent_fw_; }
  const GruParams& sentence_backward() const { return sent_bw_; }
  const AttentionParams& sentence_attention() const { return sent_attn_; }
  Parameter& projection_weight() const { return *proj_w_; }
  Parameter& projection_bias() const { return *proj_b_; }

 private:
  DocumentEncoderConfig config_;
  Parameter* embeddings_ = nullptr;
  GruParams word_fw_, word_bw_, sent_fw_, sent_bw_;
  AttentionParams word_attn_{}, sent_attn_{};
  Parameter* proj_w_ = nullptr;
  Parameter* proj_b_ = nullptr;
};

/// Bidirectional recurrent layer + attention pooling over a flat token
/// sequence; the twin encoder behind the learned similarity function.
class AttentiveSequenceEncoder {
 public:
  AttentiveSequenceEncoder() = default;
  AttentiveSequenceEncoder(ParameterStore& store, const std::string& prefix,
                           Parameter& embeddings, std::size_t hidden_dim,
                           double stddev, std::mt19937_64& rng)
      : embeddings_(&embeddings) {
    const std::size_t in = embeddings.value.cols();
    fw_ = GruParams::create(store, prefix + ".fw", in, hidden_dim, stddev, rng);
    bw_ = GruParams::create(store, prefix + ".bw", in, hidden_dim, stddev, rng);
    attn_ = AttentionParams::create(store, prefix + ".attn", 2 * hidden_dim,
                                    stddev, rng);
  }

  std::size_t output_dim() const { return 2 * fw_.hidden_dim; }

  Var encode(Tape& tape, const std::vector<std::size_t>& tokens) const {
    if (tokens.empty()) {
      throw std::invalid_argument("sequence encoder: empty token list");
    }
    Var embedded = embed(tape, SentenceBatch::from({tokens}), *embeddings_);
    Var states = gru_encode_bidirectional(tape, ops::row(embedded, 0),
                                          tokens.size(), fw_, bw_);
    return attention_pool(tape, states, tokens.size(), attn_).vector;
  }

 private:
  Parameter* embeddings_ = nullptr;
  GruParams fw_{}, bw_{};
  AttentionParams attn_{};
};

}  // namespace pjfcann
