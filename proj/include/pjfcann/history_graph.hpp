// Successful-interaction history and the per-pair job/resume graphs built
// from it.
#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pjfcann/corpus.hpp"
#include "pjfcann/similarity.hpp"

namespace pjfcann {

/// Index over successful (job, resume) records.
class HistoryIndex {
 public:
  HistoryIndex() = default;
  /// Pairs with label 0 are ignored.
  explicit HistoryIndex(const std::vector<LabeledPair>& pairs) {
    for (const auto& p : pairs) {
      if (p.label == 1) insert(p.job, p.resume);
    }
  }

  void insert(const std::string& job, const std::string& resume) {
    if (records_.emplace(job, resume).second) {
      jobs_by_resume_[resume].insert(job);
      resumes_by_job_[job].insert(resume);
    }
  }

  std::size_t size() const { return records_.size(); }
  bool contains(const std::string& job, const std::string& resume) const {
    return records_.count({job, resume}) > 0;
  }
  const std::set<std::pair<std::string, std::string>>& records() const {
    return records_;
  }

  /// Jobs the current resume succeeded with, other than the current job,
  /// ascending by id.
  std::vector<std::string> related_jobs(const std::string& job,
                                        const std::string& resume) const {
    return others(jobs_by_resume_, resume, job);
  }
  /// Resumes that succeeded with the current job, other than the current
  /// resume, ascending by id.
  std::vector<std::string> related_resumes(const std::string& job,
                                           const std::string& resume) const {
    return others(resumes_by_job_, job, resume);
  }

 private:
  static std::vector<std::string> others(
      const std::map<std::string, std::set<std::string>>& index,
      const std::string& key, const std::string& exclude) {
    std::vector<std::string> out;
    auto it = index.find(key);
    if (it == index.end()) return out;
    for (const auto& id : it->second)
      if (id != exclude) out.push_back(id);
    return out;
  }

  std::set<std::pair<std::string, std::string>> records_;
  std::map<std::string, std::set<std::string>> jobs_by_resume_;
  std::map<std::string, std::set<std::string>> resumes_by_job_;
};

/// Node 0 is the current entity; adjacency holds raw similarities.
struct RecruitmentGraph {
  std::vector<std::string> nodes;
  Tensor adjacency;

  std::size_t size() const { return nodes.size(); }
};

struct GraphOptions {
  bool self_loops = false;
  std::size_t max_related = 20;

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(GraphOptions, self_loops,
                                              max_related)
};

using SimilarityLookup =
    std::function<double(const std::string&, const std::string&)>;

/// Builds the graph over {current} ∪ related. When there are more related
/// entities than max_related, the ones most similar to the current entity
/// are kept (ties broken by ascending id); kept nodes stay in ascending id
/// order.
inline RecruitmentGraph build_graph(const std::string& current,
                                    std::vector<std::string> related,
                                    const SimilarityLookup& sim,
                                    const GraphOptions& options = {}) {
  std::sort(related.begin(), related.end());
  related.erase(std::unique(related.begin(), related.end()), related.end());
  related.erase(std::remove(related.begin(), related.end(), current),
                related.end());
  if (related.size() > options.max_related) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& r : related) scored.emplace_back(sim(current, r), r);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) {
                       if (a.first != b.first) return a.first > b.first;
                       return a.second < b.second;
                     });
    related.clear();
    for (std::size_t i = 0; i < options.max_related; ++i)
      related.push_back(scored[i].second);
    std::sort(related.begin(), related.end());
  }
  RecruitmentGraph g;
  g.nodes.push_back(current);
  g.nodes.insert(g.nodes.end(), related.begin(), related.end());
  const std::size_t n = g.nodes.size();
  g.adjacency = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    if (options.self_loops) g.adjacency.at(i, i) = sim(g.nodes[i], g.nodes[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = sim(g.nodes[i], g.nodes[j]);
      g.adjacency.at(i, j) = s;
      g.adjacency.at(j, i) = s;
    }
  }
  return g;
}

/// Divides each row by the sum of its absolute entries (rows summing to
/// zero are left as they are).
inline Tensor normalize_rows(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) total += std::abs(a.at(i, j));
    if (total == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) /= total;
  }
  return out;
}

/// Memoised similarity between corpus entities of one side. Documents are
/// flattened to a single token list.
class EntitySimilarity {
 public:
  EntitySimilarity(const SimilarityFunction& fn,
                   std::function<const Document&(const std::string&)> lookup)
      : fn_(&fn), lookup_(std::move(lookup)) {}

  double operator()(const std::string& a, const std::string& b) {
    const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double s = fn_->compare(representation(a), representation(b));
    cache_.emplace(key, s);
    return s;
  }

  const Representation& representation(const std::string& id) {
    auto it = reps_.find(id);
    if (it != reps_.end()) return it->second;
    return reps_.emplace(id, fn_->represent(lookup_(id).tokens())).first->second;
  }

  SimilarityLookup lookup() {
    return [this](const std::string& a, const std::string& b) {
      return (*this)(a, b);
    };
  }

 private:
  const SimilarityFunction* fn_;
  std::function<const Document&(const std::string&)> lookup_;
  std::map<std::pair<std::string, std::string>, double> cache_;
  std::map<std::string, Representation> reps_;
};

}  // namespace pjfcann
