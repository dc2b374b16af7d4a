// Turns labeled (job, resume) pairs into forward-pass inputs: cached token
// ids per entity and the two history graphs per pair.
#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pjfcann/corpus.hpp"
#include "pjfcann/history_graph.hpp"
#include "pjfcann/model.hpp"

namespace pjfcann {

class PairBuilder {
 public:
  /// `similarity` may be null when the model has no global path.
  PairBuilder(const Corpus& corpus, const Vocabulary& vocab,
              const HistoryIndex& history, const SimilarityFunction* similarity,
              const ModelConfig& config)
      : vocab_(&vocab), history_(&history), config_(config) {
    for (const auto& j : corpus.jobs) jobs_.emplace(j.id, &j);
    for (const auto& r : corpus.resumes) resumes_.emplace(r.id, &r);
    if (config_.uses_global()) {
      if (similarity == nullptr) {
        throw std::invalid_argument("pair builder: graphs need a similarity function");
      }
      job_sim_ = std::make_unique<EntitySimilarity>(
          *similarity, [this](const std::string& id) -> const Document& {
            return document(jobs_, id, "job");
          });
      resume_sim_ = std::make_unique<EntitySimilarity>(
          *similarity, [this](const std::string& id) -> const Document& {
            return document(resumes_, id, "resume");
          });
    }
  }

  PairBuilder(const PairBuilder&) = delete;
  PairBuilder& operator=(const PairBuilder&) = delete;

  PairInput build(const LabeledPair& p) {
    PairInput in;
    in.job = p.job;
    in.resume = p.resume;
    in.label = p.label;
    if (config_.uses_local()) {
      in.job_text = text(job_text_, jobs_, p.job, "job");
      in.resume_text = text(resume_text_, resumes_, p.resume, "resume");
    }
    if (config_.uses_global()) {
      in.job_graph = graph(build_graph(p.job, history_->related_jobs(p.job, p.resume),
                                       job_sim_->lookup(), config_.graph));
      in.resume_graph =
          graph(build_graph(p.resume, history_->related_resumes(p.job, p.resume),
                            resume_sim_->lookup(), config_.graph));
    }
    return in;
  }

  std::vector<PairInput> build_all(const std::vector<LabeledPair>& pairs) {
    std::vector<PairInput> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(build(p));
    return out;
  }

 private:
  using DocIndex = std::map<std::string, const Document*>;
  using TextCache = std::map<std::string, std::shared_ptr<const EncodedText>>;

  static const Document& document(const DocIndex& index, const std::string& id,
                                  const char* what) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw std::out_of_range(std::string("unknown ") + what + " id " + id);
    }
    return *it->second;
  }

  std::shared_ptr<const EncodedText> text(TextCache& cache, const DocIndex& index,
                                          const std::string& id, const char* what) {
    auto it = cache.find(id);
    if (it != cache.end()) return it->second;
    auto t = std::make_shared<const EncodedText>(
        encode_text(document(index, id, what), *vocab_));
    cache.emplace(id, t);
    return t;
  }

  std::shared_ptr<const RecruitmentGraph> graph(RecruitmentGraph g) const {
    if (config_.row_normalize) g.adjacency = normalize_rows(g.adjacency);
    return std::make_shared<const RecruitmentGraph>(std::move(g));
  }

  const Vocabulary* vocab_;
  const HistoryIndex* history_;
  ModelConfig config_;
  DocIndex jobs_;
  DocIndex resumes_;
  TextCache job_text_;
  TextCache resume_text_;
  std::unique_ptr<EntitySimilarity> job_sim_;
  std::unique_ptr<EntitySimilarity> resume_sim_;
};

}  // namespace pjfcann
