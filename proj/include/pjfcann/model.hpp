// The full matcher: local text matching, history-graph propagation, global
// fusion, and the comparison head.
#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjfcann/coattention.hpp"
#include "pjfcann/encoders.hpp"
#include "pjfcann/fusion.hpp"
#include "pjfcann/ggnn.hpp"
#include "pjfcann/history_graph.hpp"
#include "pjfcann/text.hpp"

namespace pjfcann {

struct ModelConfig {
  std::size_t word_dim = 200;
  std::size_t encoder_hidden = 32;  // per direction
  std::size_t d = 200;
  std::size_t d2 = 512;
  std::size_t ggnn_steps = 1;
  double dropout = 0.5;
  double init_stddev = 0.1;
  double global_dim_ratio = 0.5;
  bool normalize_alpha = false;
  bool share_ggnn = false;
  bool row_normalize = true;
  GraphOptions graph;

  /// Global share of the 2d-wide pair representation.
  std::size_t global_width() const {
    return static_cast<std::size_t>(
        std::llround(global_dim_ratio * 2.0 * static_cast<double>(d)));
  }
  std::size_t local_width() const { return 2 * d - global_width(); }
  bool uses_global() const { return global_width() > 0; }
  bool uses_local() const { return local_width() > 0; }
  bool projected() const { return global_width() != d; }

  void validate() const {
    if (word_dim == 0 || encoder_hidden == 0 || d == 0 || d2 == 0 ||
        ggnn_steps == 0) {
      throw std::invalid_argument("model config: dimensions must be positive");
    }
    if (!(global_dim_ratio >= 0.0 && global_dim_ratio <= 1.0)) {
      throw std::invalid_argument("model config: global_dim_ratio must lie in [0, 1]");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw std::invalid_argument("model config: dropout must lie in [0, 1)");
    }
  }

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(ModelConfig, word_dim,
                                              encoder_hidden, d, d2, ggnn_steps,
                                              dropout, init_stddev,
                                              global_dim_ratio, normalize_alpha,
                                              share_ggnn, row_normalize, graph)
};

struct PredictionParams {
  Parameter* w_d = nullptr;  // [d2 x 2(local + global)]
  Parameter* b_d = nullptr;  // [d2]
  Parameter* w_y = nullptr;  // [1 x d2]
  Parameter* b_y = nullptr;  // [1]

  static PredictionParams create(ParameterStore& store, const std::string& prefix,
                                 std::size_t side_width, std::size_t d2,
                                 double stddev, std::mt19937_64& rng) {
    PredictionParams p;
    p.w_d = &store.add_gaussian(prefix + ".W_d", {d2, 3 * side_width}, stddev, rng);
    p.b_d = &store.add_gaussian(prefix + ".b_d", {d2}, stddev, rng);
    p.w_y = &store.add_gaussian(prefix + ".W_y", {1, d2}, stddev, rng);
    p.b_y = &store.add_gaussian(prefix + ".b_y", {1}, stddev, rng);
    return p;
  }
};

/// D = tanh(W_d [H^J; H^R; H^J - H^R] + b_d), optional dropout on D,
/// Ŷ = σ(W_y D + b_y) clamped to [ε, 1 - ε]. Returns shape [1].
inline Var predict(Tape& tape, Var job, Var resume, const PredictionParams& p,
                   double dropout = 0.0, std::mt19937_64* rng = nullptr) {
  if (job.shape() != resume.shape() || job.value().rank() != 1) {
    throw ShapeError("predict: representation shapes " +
                     shape_string(job.shape()) + " vs " +
                     shape_string(resume.shape()));
  }
  if (3 * job.size() != p.w_d->value.cols()) {
    throw ShapeError("predict: representation width " +
                     std::to_string(job.size()) + " does not match W_d " +
                     shape_string(p.w_d->value.shape));
  }
  Var features = ops::concat({job, resume, ops::sub(job, resume)});
  Var hidden = ops::tanh(
      ops::linear(features, tape.param(*p.w_d), tape.param(*p.b_d)));
  if (rng != nullptr && dropout > 0.0)
    hidden = ops::dropout(hidden, dropout, true, *rng);
  Var y = ops::sigmoid(
      ops::linear(hidden, tape.param(*p.w_y), tape.param(*p.b_y)));
  return ops::clamp(y, ops::kBceEpsilon, 1.0 - ops::kBceEpsilon);
}

/// Token ids of one entity: items (requirements or experiences), each a list
/// of sentences.
struct EncodedText {
  std::vector<std::vector<std::vector<std::size_t>>> items;
};

inline EncodedText encode_text(const Document& doc, const Vocabulary& vocab) {
  EncodedText out;
  for (const auto& item : doc.sentences) {
    std::vector<std::vector<std::size_t>> sentences;
    for (const auto& s : split_sentences(item)) sentences.push_back(vocab.encode(s));
    if (!sentences.empty()) out.items.push_back(std::move(sentences));
  }
  if (out.items.empty()) {
    throw std::invalid_argument("entity " + doc.id + " has no tokens");
  }
  return out;
}

/// Everything the forward pass needs for one (job, resume) pair. The graphs'
/// adjacency is used as stored; normalise before building the input.
struct PairInput {
  std::string job;
  std::string resume;
  int label = 0;
  std::shared_ptr<const EncodedText> job_text;
  std::shared_ptr<const EncodedText> resume_text;
  std::shared_ptr<const RecruitmentGraph> job_graph;
  std::shared_ptr<const RecruitmentGraph> resume_graph;
};

enum class Mode { kTrain, kEval };

struct ForwardHooks {
  GgnnHooks ggnn;
};

struct PairOutput {
  Var prediction;  // [1]
  Var job;         // H^J fed to the head
  Var resume;      // H^R fed to the head
  std::optional<LocalRepresentation> local;
  std::optional<GlobalRepresentation> global;
  std::optional<Var> job_states;     // g^J after propagation
  std::optional<Var> resume_states;  // g^R after propagation
};

class PjfModel {
 public:
  PjfModel(const ModelConfig& config, Vocabulary vocab,
           const std::vector<std::string>& job_ids,
           const std::vector<std::string>& resume_ids, std::uint64_t seed)
      : config_(config),
        vocab_(std::move(vocab)),
        job_ids_(job_ids),
        resume_ids_(resume_ids),
        seed_(seed) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const double s = config_.init_stddev;
    const std::size_t d = config_.d;
    embeddings_ = &store_.add_gaussian("embedding.words",
                                       {vocab_.size(), config_.word_dim}, s, rng);
    for (std::size_t k = 0; k < config_.word_dim; ++k)
      embeddings_->value.at(Vocabulary::kPad, k) = 0.0;
    if (config_.uses_local()) {
      DocumentEncoderConfig enc{config_.word_dim, config_.encoder_hidden, d};
      encoder_ = DocumentEncoder(store_, "encoder", *embeddings_, enc, s, rng);
      coattention_ = CoAttentionParams::create(store_, "coattention", d, s, rng);
      if (config_.projected())
        proj_local_ = &store_.add_gaussian("project.local",
                                           {config_.local_width(), d}, s, rng);
    }
    if (config_.uses_global()) {
      jobs_ = EntityTable(store_, "graph.jobs", job_ids_, d, s, rng);
      resumes_ = EntityTable(store_, "graph.resumes", resume_ids_, d, s, rng);
      if (config_.share_ggnn) {
        ggnn_jobs_ = GgnnParams::create(store_, "ggnn.shared", d,
                                        config_.ggnn_steps, s, rng);
        ggnn_resumes_ = ggnn_jobs_;
      } else {
        ggnn_jobs_ = GgnnParams::create(store_, "ggnn.jobs", d,
                                        config_.ggnn_steps, s, rng);
        ggnn_resumes_ = GgnnParams::create(store_, "ggnn.resumes", d,
                                           config_.ggnn_steps, s, rng);
      }
      fusion_ = FusionParams::create(store_, "fusion", d, s, rng);
      if (config_.projected())
        proj_global_ = &store_.add_gaussian("project.global",
                                            {config_.global_width(), d}, s, rng);
    }
    head_ = PredictionParams::create(store_, "predict", 2 * d, config_.d2, s, rng);
  }

  PjfModel(const PjfModel&) = delete;
  PjfModel& operator=(const PjfModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const std::vector<std::string>& job_ids() const { return job_ids_; }
  const std::vector<std::string>& resume_ids() const { return resume_ids_; }
  std::uint64_t seed() const { return seed_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const CoAttentionParams& coattention() const { return coattention_; }
  const FusionParams& fusion() const { return fusion_; }
  const PredictionParams& head() const { return head_; }
  const GgnnParams& ggnn_jobs() const { return ggnn_jobs_; }
  const GgnnParams& ggnn_resumes() const { return ggnn_resumes_; }
  const EntityTable& job_table() const { return jobs_; }
  const EntityTable& resume_table() const { return resumes_; }
  const DocumentEncoder& encoder() const { return encoder_; }

  /// One vector per item, stacked to [items x d].
  Var encode_items(Tape& tape, const EncodedText& text) const {
    std::vector<Var> rows;
    for (const auto& item : text.items) rows.push_back(encoder_.encode(tape, item));
    return ops::stack(rows);
  }

  /// `rng` supplies dropout masks in train mode and may be null in eval mode.
  PairOutput forward(Tape& tape, const PairInput& in, Mode mode,
                     std::mt19937_64* rng = nullptr,
                     const ForwardHooks& hooks = {}) const {
    if (mode == Mode::kTrain && config_.dropout > 0.0 && rng == nullptr) {
      throw std::invalid_argument("forward: train mode needs a dropout rng");
    }
    PairOutput out;
    std::vector<Var> job_parts, resume_parts;
    if (config_.uses_local()) {
      if (!in.job_text || !in.resume_text) {
        throw std::invalid_argument("forward: pair " + in.job + "/" + in.resume +
                                    " has no text");
      }
      Var req = encode_items(tape, *in.job_text);
      Var exp = encode_items(tape, *in.resume_text);
      out.local = local_match(tape, req, exp, coattention_);
      job_parts.push_back(project(tape, out.local->job, proj_local_));
      resume_parts.push_back(project(tape, out.local->resume, proj_local_));
    }
    if (config_.uses_global()) {
      if (!in.job_graph || !in.resume_graph) {
        throw std::invalid_argument("forward: pair " + in.job + "/" + in.resume +
                                    " has no graphs");
      }
      Var gj = propagate(tape, *in.job_graph, jobs_, ggnn_jobs_, hooks);
      Var gr = propagate(tape, *in.resume_graph, resumes_, ggnn_resumes_, hooks);
      out.job_states = gj;
      out.resume_states = gr;
      out.global = global_relations(tape, gj, gr, fusion_, config_.normalize_alpha);
      job_parts.push_back(project(tape, out.global->job, proj_global_));
      resume_parts.push_back(project(tape, out.global->resume, proj_global_));
    }
    out.job = job_parts.size() == 1 ? job_parts[0] : ops::concat(job_parts);
    out.resume =
        resume_parts.size() == 1 ? resume_parts[0] : ops::concat(resume_parts);
    const bool train = mode == Mode::kTrain;
    out.prediction = predict(tape, out.job, out.resume, head_,
                             train ? config_.dropout : 0.0, train ? rng : nullptr);
    return out;
  }

  /// Eval-mode probability for one pair.
  double score(const PairInput& in) const {
    Tape tape;
    return forward(tape, in, Mode::kEval).prediction.value()[0];
  }

 private:
  Var project(Tape& tape, Var x, Parameter* w) const {
    return w == nullptr ? x : ops::linear(x, tape.param(*w));
  }

  Var propagate(Tape& tape, const RecruitmentGraph& g, const EntityTable& table,
                const GgnnParams& params, const ForwardHooks& hooks) const {
    Var states = table.lookup(tape, g.nodes);
    Var adjacency = tape.constant(g.adjacency);
    return run_ggnn(tape, states, adjacency, params, hooks.ggnn);
  }

  ModelConfig config_;
  Vocabulary vocab_;
  std::vector<std::string> job_ids_;
  std::vector<std::string> resume_ids_;
  std::uint64_t seed_;
  ParameterStore store_;
  Parameter* embeddings_ = nullptr;
  DocumentEncoder encoder_;
  CoAttentionParams coattention_;
  EntityTable jobs_;
  EntityTable resumes_;
  GgnnParams ggnn_jobs_;
  GgnnParams ggnn_resumes_;
  FusionParams fusion_;
  Parameter* proj_local_ = nullptr;
  Parameter* proj_global_ = nullptr;
  PredictionParams head_;
};

}  // namespace pjfcann
