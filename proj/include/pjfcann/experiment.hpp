// End-to-end run: filter, split, vocabulary, history index, similarity
// function, pair inputs, training, and test evaluation.
#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjfcann/corpus.hpp"
#include "pjfcann/history_graph.hpp"
#include "pjfcann/model.hpp"
#include "pjfcann/pairs.hpp"
#include "pjfcann/similarity.hpp"
#include "pjfcann/training.hpp"

namespace pjfcann {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string similarity = "encoder-cosine";
  SimilarityOptions similarity_options;
  SimilarityTrainingConfig similarity_training;
  std::size_t similarity_max_pairs = 2000;
  SplitConfig split;
  bool filter = true;
  FilterConfig filter_config;
  std::size_t min_token_frequency = 1;
  std::string pretrained_embeddings;  // optional "token v1 v2 ..." file
  std::uint64_t seed = 1;

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(
      RunConfig, model, train, similarity, similarity_options,
      similarity_training, similarity_max_pairs, split, filter, filter_config,
      min_token_frequency, pretrained_embeddings, seed)
};

/// Small dimensions that train in minutes on one core.
inline RunConfig toy_config() {
  RunConfig c;
  c.model.word_dim = 16;
  c.model.encoder_hidden = 16;
  c.model.d = 32;
  c.model.d2 = 32;
  c.model.dropout = 0.1;
  c.model.init_stddev = 0.3;
  c.train.epochs = 12;
  c.train.learning_rate = 3e-3;
  c.train.lr_decay = 0.5;
  c.train.decay_every = 4;
  return c;
}

/// FNV-1a of the canonical JSON dump.
inline std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Same-side document pairs for the supervised similarity encoder: two
/// resumes both hired by one job are labelled 1, a hired and a rejected
/// resume of one job 0; job pairs are formed the same way per resume.
/// Classes are balanced and capped at max_pairs in total.
inline std::vector<SimilarityTrainingPair> similarity_training_pairs(
    const Corpus& corpus, const std::vector<LabeledPair>& pairs,
    const Vocabulary& vocab, std::size_t max_pairs, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> tokens;
  for (const auto& j : corpus.jobs) tokens["J\x1f" + j.id] = vocab.encode(j.tokens());
  for (const auto& r : corpus.resumes) tokens["R\x1f" + r.id] = vocab.encode(r.tokens());
  std::map<std::string, std::set<std::string>> ok_by_job, bad_by_job, ok_by_resume,
      bad_by_resume;
  for (const auto& p : pairs) {
    (p.label == 1 ? ok_by_job : bad_by_job)[p.job].insert(p.resume);
    (p.label == 1 ? ok_by_resume : bad_by_resume)[p.resume].insert(p.job);
  }
  std::vector<std::pair<std::string, std::string>> pos, neg;
  auto collect = [&](const auto& ok, const auto& bad, const std::string& side) {
    for (const auto& [key, good] : ok) {
      std::vector<std::string> g(good.begin(), good.end());
      for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = a + 1; b < g.size(); ++b)
          pos.emplace_back(side + g[a], side + g[b]);
      auto it = bad.find(key);
      if (it == bad.end()) continue;
      for (const auto& s : g)
        for (const auto& f : it->second) neg.emplace_back(side + s, side + f);
    }
  };
  collect(ok_by_job, bad_by_job, "R\x1f");
  collect(ok_by_resume, bad_by_resume, "J\x1f");
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const std::size_t per_class = std::min({pos.size(), neg.size(), max_pairs / 2});
  std::vector<SimilarityTrainingPair> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    out.push_back({tokens.at(pos[i].first), tokens.at(pos[i].second), 1});
    out.push_back({tokens.at(neg[i].first), tokens.at(neg[i].second), 0});
  }
  return out;
}

/// Everything derived from (corpus, config) before training.
struct PreparedRun {
  RunConfig config;
  Corpus corpus;
  SplitPlan plan;
  Vocabulary vocab;
  HistoryIndex history;
  std::unique_ptr<SimilarityFunction> similarity;
  std::optional<SimilarityTrainingReport> similarity_report;
  std::unique_ptr<PairBuilder> builder;
  std::vector<PairInput> train;
  std::vector<PairInput> valid;
  std::vector<PairInput> test;
};

inline Vocabulary corpus_vocabulary(const Corpus& corpus, std::size_t min_frequency) {
  std::vector<TokenSentence> docs;
  for (const auto& j : corpus.jobs) docs.push_back(j.tokens());
  for (const auto& r : corpus.resumes) docs.push_back(r.tokens());
  return Vocabulary::build(docs, min_frequency);
}

/// Builds a similarity function for `config` and fits or trains it on the
/// entities of the history and training pairs.
inline std::unique_ptr<SimilarityFunction> make_similarity(
    const RunConfig& config, const Corpus& corpus, const Vocabulary& vocab,
    const std::vector<LabeledPair>& fit_pairs,
    std::optional<SimilarityTrainingReport>* report = nullptr) {
  auto fn = std::make_unique<SimilarityFunction>(
      parse_similarity(config.similarity), vocab, config.similarity_options);
  if (fn->needs_fit()) {
    std::set<std::string> jobs, resumes;
    for (const auto& p : fit_pairs) {
      jobs.insert(p.job);
      resumes.insert(p.resume);
    }
    std::vector<TokenSentence> docs;
    for (const auto& j : corpus.jobs)
      if (jobs.count(j.id)) docs.push_back(j.tokens());
    for (const auto& r : corpus.resumes)
      if (resumes.count(r.id)) docs.push_back(r.tokens());
    fn->fit(docs);
  }
  if (fn->kind() == SimilarityKind::kSupervised) {
    auto pairs = similarity_training_pairs(corpus, fit_pairs, vocab,
                                           config.similarity_max_pairs,
                                           config.seed);
    auto r = fn->train(std::move(pairs), config.similarity_training);
    if (report) *report = r;
  }
  return fn;
}

inline std::unique_ptr<PreparedRun> prepare_run(const Corpus& raw,
                                                const RunConfig& config) {
  config.model.validate();
  config.train.validate();
  auto run = std::make_unique<PreparedRun>();
  run->config = config;
  run->corpus = config.filter ? filter_corpus(raw, config.filter_config) : raw;
  run->plan = make_split(labeled_pairs(run->corpus), config.seed, config.split);
  run->vocab = corpus_vocabulary(run->corpus, config.min_token_frequency);
  run->history = HistoryIndex(run->plan.history);
  if (config.model.uses_global()) {
    std::vector<LabeledPair> fit_pairs = run->plan.history;
    fit_pairs.insert(fit_pairs.end(), run->plan.train.begin(), run->plan.train.end());
    run->similarity = make_similarity(config, run->corpus, run->vocab, fit_pairs,
                                      &run->similarity_report);
  }
  run->builder = std::make_unique<PairBuilder>(run->corpus, run->vocab, run->history,
                                               run->similarity.get(), config.model);
  run->train = run->builder->build_all(run->plan.train);
  run->valid = run->builder->build_all(run->plan.valid);
  run->test = run->builder->build_all(run->plan.test);
  return run;
}

inline std::vector<std::string> ids_of(const std::vector<Document>& docs) {
  std::vector<std::string> out;
  for (const auto& d : docs) out.push_back(d.id);
  return out;
}

inline std::unique_ptr<PjfModel> make_model(const PreparedRun& run) {
  auto model = std::make_unique<PjfModel>(run.config.model, run.vocab,
                                          ids_of(run.corpus.jobs),
                                          ids_of(run.corpus.resumes), run.config.seed);
  if (!run.config.pretrained_embeddings.empty()) {
    Parameter& table = model->parameters().get("embedding.words");
    load_pretrained_embeddings(run.config.pretrained_embeddings, run.vocab,
                               table.value);
  }
  return model;
}

struct RunResult {
  std::unique_ptr<PreparedRun> prepared;
  std::unique_ptr<PjfModel> model;
  FitResult fit;
  Metrics test;
  double seconds = 0.0;
};

inline RunResult run_experiment(const Corpus& corpus, const RunConfig& config,
                                const std::function<void(const EpochLog&)>& on_epoch = {}) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.prepared = prepare_run(corpus, config);
  r.model = make_model(*r.prepared);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  r.fit = fit(*r.model, r.prepared->train, r.prepared->valid, tc, on_epoch);
  r.test = evaluate(*r.model, r.prepared->test, tc.threshold);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count();
  return r;
}

inline std::string run_label(const RunConfig& c) {
  return c.model.uses_global() ? "PJFCANN" : "PJFCANN (w/o GNN)";
}

}  // namespace pjfcann
