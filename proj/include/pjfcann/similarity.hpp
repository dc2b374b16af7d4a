// Document similarity functions used for graph edge weights.
//
// Bag-of-vectors kinds (mean, tfidf, sif) compare weighted averages of word
// vectors by cosine. wmd uses the relaxed word mover's lower bound (each word
// travels to its nearest counterpart), turned into a similarity as
// 1 / (1 + distance). The two encoder kinds compare recurrent attentive
// encodings by cosine: encoder-cosine keeps its random initialisation,
// supervised is trained on co-hired / not co-hired pairs.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjfcann/encoders.hpp"
#include "pjfcann/optim.hpp"
#include "pjfcann/text.hpp"

namespace pjfcann {

enum class SimilarityKind { kEncoderCosine, kMean, kTfIdf, kSif, kWmd, kSupervised };

inline const std::vector<SimilarityKind>& all_similarity_kinds() {
  static const std::vector<SimilarityKind> kinds = {
      SimilarityKind::kEncoderCosine, SimilarityKind::kMean,
      SimilarityKind::kTfIdf,         SimilarityKind::kSif,
      SimilarityKind::kWmd,           SimilarityKind::kSupervised};
  return kinds;
}

inline std::string similarity_name(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::kEncoderCosine: return "encoder-cosine";
    case SimilarityKind::kMean: return "mean";
    case SimilarityKind::kTfIdf: return "tfidf";
    case SimilarityKind::kSif: return "sif";
    case SimilarityKind::kWmd: return "wmd";
    case SimilarityKind::kSupervised: return "supervised";
  }
  return "?";
}

inline SimilarityKind parse_similarity(const std::string& s) {
  for (auto k : all_similarity_kinds())
    if (similarity_name(k) == s) return k;
  throw std::invalid_argument("unknown similarity kind: " + s);
}

struct SimilarityOptions {
  std::size_t word_dim = 16;
  std::size_t hidden_dim = 16;
  double sif_a = 1e-3;
  bool sif_remove_pc = true;
  std::uint64_t seed = 11;

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(SimilarityOptions, word_dim,
                                              hidden_dim, sif_a, sif_remove_pc,
                                              seed)
};

/// Precomputed per-document state: a vector for cosine kinds, the bag of
/// word indices for wmd.
struct Representation {
  Tensor vector;
  std::vector<std::size_t> tokens;
};

struct SimilarityTrainingPair {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
  int label = 0;
};

struct SimilarityTrainingConfig {
  std::size_t epochs = 8;
  double learning_rate = 5e-3;
  std::size_t batch_size = 16;
  double valid_fraction = 0.2;  // 4:1 train/valid
  std::uint64_t seed = 5;

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(SimilarityTrainingConfig, epochs,
                                              learning_rate, batch_size,
                                              valid_fraction, seed)
};

struct SimilarityTrainingReport {
  std::size_t train_pairs = 0;
  std::size_t valid_pairs = 0;
  double train_accuracy = 0.0;
  double valid_accuracy = 0.0;
  std::vector<double> epoch_loss;
};

namespace detail {
inline double cosine(const Tensor& a, const Tensor& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}
}  // namespace detail

class SimilarityFunction {
 public:
  /// Word vectors default to Gaussian(0, 1) rows seeded by options.seed.
  SimilarityFunction(SimilarityKind kind, Vocabulary vocab,
                     SimilarityOptions options = {},
                     std::optional<Tensor> word_vectors = std::nullopt)
      : kind_(kind), vocab_(std::move(vocab)), options_(options) {
    std::mt19937_64 rng(options_.seed);
    if (word_vectors) {
      if (word_vectors->rank() != 2 || word_vectors->rows() != vocab_.size()) {
        throw ShapeError("similarity: word vectors " +
                         shape_string(word_vectors->shape) +
                         " do not match vocabulary size " +
                         std::to_string(vocab_.size()));
      }
      words_ = std::move(*word_vectors);
      options_.word_dim = words_.cols();
    } else {
      words_ = Tensor({vocab_.size(), options_.word_dim});
      std::normal_distribution<double> dist(0.0, 1.0);
      for (double& x : words_.data) x = dist(rng);
    }
    if (is_encoder()) init_encoder(rng);
  }

  SimilarityKind kind() const { return kind_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const SimilarityOptions& options() const { return options_; }
  bool is_encoder() const {
    return kind_ == SimilarityKind::kEncoderCosine ||
           kind_ == SimilarityKind::kSupervised;
  }
  bool needs_fit() const {
    return kind_ == SimilarityKind::kTfIdf || kind_ == SimilarityKind::kSif;
  }
  bool fitted() const { return fitted_; }

  /// Fits document frequencies (tfidf) or word frequencies and the common
  /// component (sif). Call on training documents only.
  void fit(const std::vector<TokenSentence>& documents) {
    document_count_ = documents.size();
    doc_freq_.clear();
    word_freq_.clear();
    total_words_ = 0;
    for (const auto& d : documents) {
      std::set<std::size_t> seen;
      for (const auto& t : d) {
        const std::size_t idx = vocab_.index(t);
        ++word_freq_[idx];
        ++total_words_;
        seen.insert(idx);
      }
      for (std::size_t idx : seen) ++doc_freq_[idx];
    }
    common_component_.clear();
    fitted_ = true;
    if (kind_ == SimilarityKind::kSif && options_.sif_remove_pc &&
        documents.size() >= 2) {
      std::vector<Tensor> rows;
      for (const auto& d : documents) {
        if (!d.empty()) rows.push_back(weighted_average(vocab_.encode(d)));
      }
      if (rows.size() >= 2) common_component_ = first_component(rows);
    }
  }

  Representation represent(const TokenSentence& doc) const {
    if (doc.empty()) throw std::invalid_argument("similarity: empty document");
    if (needs_fit() && !fitted_) {
      throw std::logic_error("similarity: " + similarity_name(kind_) +
                             " statistics are not fitted");
    }
    Representation r;
    r.tokens = vocab_.encode(doc);
    if (kind_ == SimilarityKind::kWmd) return r;
    if (is_encoder()) {
      Tape tape;
      r.vector = encoder_->encode(tape, r.tokens).value();
      return r;
    }
    r.vector = weighted_average(r.tokens);
    if (!common_component_.empty()) {
      double proj = 0.0;
      for (std::size_t i = 0; i < r.vector.size(); ++i)
        proj += r.vector[i] * common_component_[i];
      for (std::size_t i = 0; i < r.vector.size(); ++i)
        r.vector[i] -= proj * common_component_[i];
    }
    return r;
  }

  double compare(const Representation& a, const Representation& b) const {
    if (kind_ == SimilarityKind::kWmd) {
      return 1.0 / (1.0 + relaxed_wmd(a.tokens, b.tokens));
    }
    return detail::cosine(a.vector, b.vector);
  }

  double similarity(const TokenSentence& a, const TokenSentence& b) const {
    return compare(represent(a), represent(b));
  }

  /// Relaxed word mover's distance: the larger of the two one-sided
  /// nearest-neighbour transport costs under normalised bag-of-words mass.
  double relaxed_wmd(const std::vector<std::size_t>& a,
                     const std::vector<std::size_t>& b) const {
    return std::max(one_sided_wmd(a, b), one_sided_wmd(b, a));
  }

  /// Probability that two documents are co-hired under the learned head
  /// sigmoid(scale * cos + bias). Encoder kinds only.
  double match_probability(const TokenSentence& a,
                           const TokenSentence& b) const {
    require_encoder();
    const double c = similarity(a, b);
    return ops::sigmoid_scalar(head_scale_->value[0] * c +
                               head_bias_->value[0]);
  }

  /// Trains the twin encoder with BCE on sigmoid(scale * cos(e_a, e_b) +
  /// bias). Pairs are split 4:1 into train/valid by a seeded shuffle.
  SimilarityTrainingReport train(std::vector<SimilarityTrainingPair> pairs,
                                 const SimilarityTrainingConfig& cfg) {
    require_encoder();
    bool has0 = false, has1 = false;
    for (const auto& p : pairs) {
      if (p.a.empty() || p.b.empty()) {
        throw std::invalid_argument("similarity training: empty document");
      }
      (p.label == 1 ? has1 : has0) = true;
    }
    if (!has0 || !has1) {
      throw std::invalid_argument(
          "similarity training: need both positive and negative pairs");
    }
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto n_valid = static_cast<std::size_t>(
        std::llround(cfg.valid_fraction * static_cast<double>(pairs.size())));
    std::vector<SimilarityTrainingPair> valid(pairs.begin(),
                                              pairs.begin() + n_valid);
    std::vector<SimilarityTrainingPair> train(pairs.begin() + n_valid,
                                              pairs.end());
    SimilarityTrainingReport report;
    report.train_pairs = train.size();
    report.valid_pairs = valid.size();
    AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    adam.l2 = 0.0;
    const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(train.begin(), train.end(), rng);
      double total = 0.0;
      for (std::size_t start = 0; start < train.size(); start += batch) {
        const std::size_t end = std::min(train.size(), start + batch);
        store_->zero_grad();
        for (std::size_t i = start; i < end; ++i) {
          Tape tape;
          Var loss = ops::scale(
              ops::bce(pair_probability(tape, train[i].a, train[i].b),
                       {static_cast<double>(train[i].label)}),
              1.0 / static_cast<double>(end - start));
          total += loss.value().item();
          tape.backward(loss);
        }
        adam_step(*store_, adam);
      }
      report.epoch_loss.push_back(
          train.empty() ? 0.0 : total * batch / static_cast<double>(train.size()));
    }
    report.train_accuracy = accuracy(train);
    report.valid_accuracy = accuracy(valid);
    return report;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = similarity_name(kind_);
    j["options"] = options_;
    j["vocabulary"] = vocab_.tokens();
    j["word_vectors"] = words_.data;
    j["fitted"] = fitted_;
    j["document_count"] = document_count_;
    j["total_words"] = total_words_;
    nlohmann::json df = nlohmann::json::array(), wf = nlohmann::json::array();
    for (const auto& [k, v] : doc_freq_) df.push_back({k, v});
    for (const auto& [k, v] : word_freq_) wf.push_back({k, v});
    j["doc_freq"] = df;
    j["word_freq"] = wf;
    j["common_component"] = common_component_;
    if (is_encoder()) {
      nlohmann::json ps = nlohmann::json::object();
      for (std::size_t i = 0; i < store_->size(); ++i)
        ps[(*store_)[i].name] = (*store_)[i].value.data;
      j["encoder"] = ps;
    }
    return j;
  }

  static SimilarityFunction from_json(const nlohmann::json& j) {
    Vocabulary vocab =
        Vocabulary::from_tokens(j.at("vocabulary").get<std::vector<std::string>>());
    auto options = j.at("options").get<SimilarityOptions>();
    Tensor words({vocab.size(), options.word_dim},
                 j.at("word_vectors").get<std::vector<double>>());
    SimilarityFunction f(parse_similarity(j.at("kind").get<std::string>()),
                         std::move(vocab), options, std::move(words));
    f.fitted_ = j.at("fitted").get<bool>();
    f.document_count_ = j.at("document_count").get<std::size_t>();
    f.total_words_ = j.at("total_words").get<std::size_t>();
    for (const auto& e : j.at("doc_freq"))
      f.doc_freq_[e[0].get<std::size_t>()] = e[1].get<std::size_t>();
    for (const auto& e : j.at("word_freq"))
      f.word_freq_[e[0].get<std::size_t>()] = e[1].get<std::size_t>();
    f.common_component_ = j.at("common_component").get<std::vector<double>>();
    if (f.is_encoder()) {
      const auto& ps = j.at("encoder");
      for (std::size_t i = 0; i < f.store_->size(); ++i) {
        Parameter& p = (*f.store_)[i];
        auto vals = ps.at(p.name).get<std::vector<double>>();
        p.value = Tensor(p.value.shape, std::move(vals));
      }
    }
    return f;
  }

  /// Encoder parameters (empty store for non-encoder kinds).
  ParameterStore* encoder_parameters() { return store_.get(); }

 private:
  void init_encoder(std::mt19937_64& rng) {
    store_ = std::make_shared<ParameterStore>();
    Parameter& emb = store_->add_gaussian(
        "sim.embedding", {vocab_.size(), options_.word_dim}, 0.1, rng);
    encoder_ = std::make_shared<AttentiveSequenceEncoder>(
        *store_, "sim.encoder", emb, options_.hidden_dim, 0.1, rng);
    head_scale_ = &store_->add("sim.head.scale", Tensor::vector({5.0}));
    head_bias_ = &store_->add("sim.head.bias", Tensor::vector({0.0}));
  }

  void require_encoder() const {
    if (!is_encoder()) {
      throw std::logic_error("similarity: " + similarity_name(kind_) +
                             " has no trainable encoder");
    }
  }

  Var pair_probability(Tape& tape, const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) const {
    Var c = ops::cosine(encoder_->encode(tape, a), encoder_->encode(tape, b));
    Var logit = ops::add(ops::mul(tape.param(*head_scale_), ops::reshape(c, {1})),
                         tape.param(*head_bias_));
    return ops::sigmoid(logit);
  }

  double accuracy(const std::vector<SimilarityTrainingPair>& pairs) const {
    if (pairs.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& p : pairs) {
      Tape tape;
      const double prob = pair_probability(tape, p.a, p.b).value()[0];
      ok += (prob >= 0.5) == (p.label == 1);
    }
    return static_cast<double>(ok) / static_cast<double>(pairs.size());
  }

  double word_weight(std::size_t idx) const {
    switch (kind_) {
      case SimilarityKind::kTfIdf: {
        auto it = doc_freq_.find(idx);
        const double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
        return std::log((1.0 + static_cast<double>(document_count_)) / (1.0 + df)) + 1.0;
      }
      case SimilarityKind::kSif: {
        auto it = word_freq_.find(idx);
        const double p = (it == word_freq_.end() || total_words_ == 0)
                             ? 0.0
                             : static_cast<double>(it->second) /
                                   static_cast<double>(total_words_);
        return options_.sif_a / (options_.sif_a + p);
      }
      default: return 1.0;
    }
  }

  // Per-occurrence weighting, so tfidf gets tf * idf.
  Tensor weighted_average(const std::vector<std::size_t>& tokens) const {
    const std::size_t dim = words_.cols();
    Tensor v({dim});
    for (std::size_t idx : tokens) {
      const double w = word_weight(idx);
      for (std::size_t k = 0; k < dim; ++k) v[k] += w * words_.at(idx, k);
    }
    for (double& x : v.data) x /= static_cast<double>(tokens.size());
    return v;
  }

  // Leading right singular vector of the stacked rows, by power iteration on
  // XᵀX from a fixed start.
  static std::vector<double> first_component(const std::vector<Tensor>& rows) {
    const std::size_t dim = rows.front().size();
    std::vector<double> cov(dim * dim, 0.0);
    for (const auto& r : rows)
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t k = 0; k < dim; ++k) cov[i * dim + k] += r[i] * r[k];
    std::vector<double> u(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    for (int it = 0; it < 500; ++it) {
      std::vector<double> next(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t k = 0; k < dim; ++k) next[i] += cov[i * dim + k] * u[k];
      double norm = 0.0;
      for (double x : next) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) return {};
      double delta = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        next[i] /= norm;
        delta = std::max(delta, std::abs(next[i] - u[i]));
      }
      u = std::move(next);
      if (delta < 1e-13) break;
    }
    return u;
  }

  double one_sided_wmd(const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) const {
    if (a.empty() || b.empty()) {
      throw std::invalid_argument("wmd: empty document");
    }
    std::map<std::size_t, double> mass;
    for (std::size_t t : a) mass[t] += 1.0 / static_cast<double>(a.size());
    std::set<std::size_t> targets(b.begin(), b.end());
    const std::size_t dim = words_.cols();
    double total = 0.0;
    for (const auto& [t, m] : mass) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s : targets) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double diff = words_.at(t, k) - words_.at(s, k);
          d2 += diff * diff;
        }
        best = std::min(best, std::sqrt(d2));
      }
      total += m * best;
    }
    return total;
  }

  SimilarityKind kind_;
  Vocabulary vocab_;
  SimilarityOptions options_;
  Tensor words_;
  bool fitted_ = false;
  std::size_t document_count_ = 0;
  std::size_t total_words_ = 0;
  std::map<std::size_t, std::size_t> doc_freq_;
  std::map<std::size_t, std::size_t> word_freq_;
  std::vector<double> common_component_;
  std::shared_ptr<ParameterStore> store_;
  std::shared_ptr<AttentiveSequenceEncoder> encoder_;
  Parameter* head_scale_ = nullptr;
  Parameter* head_bias_ = nullptr;
};

}  // namespace pjfcann
