// Recruitment corpus: records, line-delimited JSON I/O, filtering, labels,
// the ten-piece split protocol, and a synthetic generator with planted signal.
//
// File format, one JSON object per line:
//   {"kind":"job","id":"J1","requirements":["...", "..."]}
//   {"kind":"resume","id":"R1","experiences":["...", "..."]}
//   {"kind":"application","job":"J1","resume":"R1",
//    "browsed":1,"delivered":1,"satisfied":0}
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pjfcann/text.hpp"

namespace pjfcann {

/// A job posting (requirements) or a resume (experiences).
struct Document {
  std::string id;
  std::vector<std::string> sentences;

  std::size_t words() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += word_count(s);
    return n;
  }
  /// All tokens, sentence boundaries dropped.
  TokenSentence tokens() const {
    TokenSentence out;
    for (const auto& s : sentences) {
      auto t = tokenize(s);
      out.insert(out.end(), t.begin(), t.end());
    }
    return out;
  }
  bool operator==(const Document&) const = default;
};

struct Application {
  std::string job;
  std::string resume;
  bool browsed = false;
  bool delivered = false;
  bool satisfied = false;
  bool operator==(const Application&) const = default;
};

/// One (job, resume, label) record.
struct LabeledPair {
  std::string job;
  std::string resume;
  int label = 0;
  bool operator==(const LabeledPair&) const = default;
  bool operator<(const LabeledPair& o) const {
    return std::tie(job, resume, label) < std::tie(o.job, o.resume, o.label);
  }
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Corpus {
  std::vector<Document> jobs;
  std::vector<Document> resumes;
  std::vector<Application> applications;

  bool operator==(const Corpus&) const = default;

  const Document* find_job(const std::string& id) const {
    for (const auto& j : jobs)
      if (j.id == id) return &j;
    return nullptr;
  }
  const Document* find_resume(const std::string& id) const {
    for (const auto& r : resumes)
      if (r.id == id) return &r;
    return nullptr;
  }

  /// Throws on duplicate ids, dangling references, or repeated pairs.
  void validate() const {
    std::set<std::string> job_ids, resume_ids;
    for (const auto& j : jobs) {
      if (!job_ids.insert(j.id).second)
        throw CorpusError("duplicate job id " + j.id);
    }
    for (const auto& r : resumes) {
      if (!resume_ids.insert(r.id).second)
        throw CorpusError("duplicate resume id " + r.id);
    }
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& a : applications) {
      if (!job_ids.count(a.job))
        throw CorpusError("application references unknown job id " + a.job);
      if (!resume_ids.count(a.resume))
        throw CorpusError("application references unknown resume id " +
                          a.resume);
      if (!pairs.insert({a.job, a.resume}).second)
        throw CorpusError("duplicate application pair (" + a.job + ", " +
                          a.resume + ")");
    }
  }
};

inline nlohmann::json to_json_line(const Document& d, bool is_job) {
  nlohmann::json j;
  j["kind"] = is_job ? "job" : "resume";
  j["id"] = d.id;
  j[is_job ? "requirements" : "experiences"] = d.sentences;
  return j;
}

inline void save_corpus(const Corpus& c, std::ostream& os) {
  for (const auto& j : c.jobs) os << to_json_line(j, true).dump() << '\n';
  for (const auto& r : c.resumes) os << to_json_line(r, false).dump() << '\n';
  for (const auto& a : c.applications) {
    nlohmann::json j;
    j["kind"] = "application";
    j["job"] = a.job;
    j["resume"] = a.resume;
    j["browsed"] = a.browsed ? 1 : 0;
    j["delivered"] = a.delivered ? 1 : 0;
    j["satisfied"] = a.satisfied ? 1 : 0;
    os << j.dump() << '\n';
  }
}

inline void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw CorpusError("cannot write corpus to " + path);
  save_corpus(c, os);
}

inline Corpus load_corpus(std::istream& in, const std::string& source = "corpus") {
  Corpus c;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw CorpusError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  auto flag = [&](const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return false;
    const auto& v = j.at(key);
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer()) {
      const auto n = v.get<long long>();
      if (n != 0 && n != 1) fail(std::string("flag ") + key + " must be 0 or 1");
      return n == 1;
    }
    fail(std::string("flag ") + key + " must be 0/1 or boolean");
    return false;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
      fail("record has no string \"kind\" field");
    const std::string kind = j["kind"];
    try {
      if (kind == "job" || kind == "resume") {
        const char* key = kind == "job" ? "requirements" : "experiences";
        Document d;
        d.id = j.at("id").get<std::string>();
        d.sentences = j.at(key).get<std::vector<std::string>>();
        (kind == "job" ? c.jobs : c.resumes).push_back(std::move(d));
      } else if (kind == "application") {
        Application a;
        a.job = j.at("job").get<std::string>();
        a.resume = j.at("resume").get<std::string>();
        a.browsed = flag(j, "browsed");
        a.delivered = flag(j, "delivered");
        a.satisfied = flag(j, "satisfied");
        c.applications.push_back(std::move(a));
      } else {
        fail("unknown kind \"" + kind + "\"");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("bad ") + kind + " record: " + e.what());
    }
  }
  c.validate();
  return c;
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus " + path);
  return load_corpus(in, path);
}

/// FNV-1a over the serialised corpus.
inline std::uint64_t corpus_hash(const Corpus& c) {
  std::ostringstream os;
  save_corpus(c, os);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

/// satisfied -> 1, delivered but not satisfied -> 0, otherwise discarded.
inline std::optional<int> derive_label(const Application& a) {
  if (a.satisfied) return 1;
  if (a.delivered) return 0;
  return std::nullopt;
}

inline std::vector<LabeledPair> labeled_pairs(const Corpus& c) {
  std::vector<LabeledPair> out;
  for (const auto& a : c.applications) {
    if (auto y = derive_label(a)) out.push_back({a.job, a.resume, *y});
  }
  return out;
}

struct FilterConfig {
  std::size_t min_resume_words = 15;
  std::size_t min_job_words = 50;
  std::size_t max_job_words = 1000;

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(FilterConfig, min_resume_words,
                                              min_job_words, max_job_words)
};

/// Drops short documents, truncates long job postings, then drops entities
/// without a successful application and any application left dangling.
inline Corpus filter_corpus(const Corpus& in, const FilterConfig& cfg = {}) {
  Corpus out;
  std::set<std::string> jobs, resumes;
  for (const auto& r : in.resumes) {
    if (r.words() >= cfg.min_resume_words) {
      out.resumes.push_back(r);
      resumes.insert(r.id);
    }
  }
  for (const auto& j : in.jobs) {
    if (j.words() < cfg.min_job_words) continue;
    Document kept{j.id, {}};
    std::size_t budget = cfg.max_job_words;
    for (const auto& s : j.sentences) {
      if (budget == 0) break;
      std::istringstream is(s);
      std::string w, acc;
      std::size_t n = 0;
      while (budget > 0 && is >> w) {
        if (n++) acc += ' ';
        acc += w;
        --budget;
      }
      if (n) {
        // Keep the sentence verbatim when it fits entirely.
        kept.sentences.push_back(word_count(s) == n ? s : acc);
      }
    }
    out.jobs.push_back(std::move(kept));
    jobs.insert(j.id);
  }
  std::vector<Application> apps;
  std::set<std::string> job_ok, resume_ok;
  for (const auto& a : in.applications) {
    if (!jobs.count(a.job) || !resumes.count(a.resume)) continue;
    apps.push_back(a);
    if (a.satisfied) {
      job_ok.insert(a.job);
      resume_ok.insert(a.resume);
    }
  }
  std::erase_if(out.jobs, [&](const Document& d) { return !job_ok.count(d.id); });
  std::erase_if(out.resumes,
                [&](const Document& d) { return !resume_ok.count(d.id); });
  for (const auto& a : apps) {
    if (job_ok.count(a.job) && resume_ok.count(a.resume))
      out.applications.push_back(a);
  }
  return out;
}

enum class PieceRole { kHistory, kTrain, kTest };

inline const char* role_name(PieceRole r) {
  switch (r) {
    case PieceRole::kHistory: return "history";
    case PieceRole::kTrain: return "train";
    case PieceRole::kTest: return "test";
  }
  return "?";
}

struct SplitPlan {
  static constexpr std::size_t kPieces = 10;
  std::vector<std::vector<LabeledPair>> pieces;
  std::vector<PieceRole> roles;
  std::vector<LabeledPair> history;  // successes of the history pieces only
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> valid;
  std::vector<LabeledPair> test;
};

struct SplitConfig {
  std::size_t history_pieces = 5;
  double valid_fraction = 0.1;

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(SplitConfig, history_pieces,
                                              valid_fraction)
};

/// Balances classes by downsampling the majority, deals each class
/// round-robin into ten pieces, then assigns one test piece, `history_pieces`
/// history pieces, and the rest to training (split train/valid).
inline SplitPlan make_split(const std::vector<LabeledPair>& pairs,
                            std::uint64_t seed, const SplitConfig& cfg = {}) {
  std::vector<LabeledPair> pos, neg;
  for (const auto& p : pairs) (p.label == 1 ? pos : neg).push_back(p);
  if (pos.empty() || neg.empty()) {
    throw std::invalid_argument("make_split: both classes must be present");
  }
  if (pos.size() < SplitPlan::kPieces) {
    throw std::invalid_argument("make_split: need at least 10 positive pairs, got " +
                                std::to_string(pos.size()));
  }
  if (cfg.history_pieces > SplitPlan::kPieces - 2) {
    throw std::invalid_argument("make_split: history pieces must be <= 8");
  }
  std::mt19937_64 rng(seed);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const std::size_t per_class = std::min(pos.size(), neg.size());
  pos.resize(per_class);
  neg.resize(per_class);

  SplitPlan plan;
  plan.pieces.resize(SplitPlan::kPieces);
  for (std::size_t i = 0; i < per_class; ++i) {
    plan.pieces[i % SplitPlan::kPieces].push_back(pos[i]);
    plan.pieces[i % SplitPlan::kPieces].push_back(neg[i]);
  }
  std::vector<std::size_t> order(SplitPlan::kPieces);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  plan.roles.assign(SplitPlan::kPieces, PieceRole::kTrain);
  plan.roles[order[0]] = PieceRole::kTest;
  for (std::size_t i = 1; i <= cfg.history_pieces; ++i)
    plan.roles[order[i]] = PieceRole::kHistory;

  std::vector<LabeledPair> training;
  for (std::size_t i = 0; i < SplitPlan::kPieces; ++i) {
    for (const auto& p : plan.pieces[i]) {
      switch (plan.roles[i]) {
        case PieceRole::kHistory:
          if (p.label == 1) plan.history.push_back(p);
          break;
        case PieceRole::kTrain: training.push_back(p); break;
        case PieceRole::kTest: plan.test.push_back(p); break;
      }
    }
  }
  std::shuffle(training.begin(), training.end(), rng);
  const auto n_valid = static_cast<std::size_t>(
      std::llround(cfg.valid_fraction * static_cast<double>(training.size())));
  plan.valid.assign(training.begin(), training.begin() + n_valid);
  plan.train.assign(training.begin() + n_valid, training.end());
  return plan;
}

/// Synthetic recruitment corpus with a known ground truth. Each skill owns a
/// token pool; a pair is a match iff the job and resume share at least
/// `overlap_threshold` skills (then flipped with probability `noise`).
/// Skills marked hidden are written with tokens from one pool shared by all
/// hidden skills, so their identity is only recoverable from who was hired
/// where, not from the text.
struct SynthConfig {
  std::size_t num_skills = 8;
  std::size_t num_jobs = 80;
  std::size_t num_resumes = 300;
  std::size_t skills_per_job = 1;
  std::size_t skills_per_resume = 1;
  std::size_t overlap_threshold = 1;
  double noise = 0.05;
  double hidden_skill_fraction = 0.0;
  std::size_t applications_per_resume = 20;
  double match_rate = 0.5;
  double browsed_only_rate = 0.05;
  std::size_t requirements_per_job = 5;
  std::size_t words_per_requirement = 10;
  std::size_t experiences_per_resume = 3;
  std::size_t words_per_experience = 6;
  std::size_t skill_pool_size = 4;
  std::size_t skill_words_per_sentence = 2;
  std::size_t mentions_per_skill = 3;  // items carrying each skill's words
  std::size_t filler_vocabulary = 60;
  std::uint64_t seed = 7;

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(
      SynthConfig, num_skills, num_jobs, num_resumes, skills_per_job,
      skills_per_resume, overlap_threshold, noise, hidden_skill_fraction,
      applications_per_resume, match_rate, browsed_only_rate,
      requirements_per_job, words_per_requirement, experiences_per_resume,
      words_per_experience, skill_pool_size, skill_words_per_sentence,
      mentions_per_skill, filler_vocabulary, seed)
};

/// Generator output: the corpus plus the planted skill sets, which tests use
/// as a brute-force label oracle.
struct SynthCorpus {
  Corpus corpus;
  std::map<std::string, std::vector<std::size_t>> job_skills;
  std::map<std::string, std::vector<std::size_t>> resume_skills;

  std::size_t overlap(const std::string& job, const std::string& resume) const {
    const auto& a = job_skills.at(job);
    const auto& b = resume_skills.at(resume);
    std::size_t n = 0;
    for (std::size_t s : a) n += std::count(b.begin(), b.end(), s);
    return n;
  }
};

namespace detail {

inline std::vector<std::size_t> sample_distinct(std::size_t universe,
                                                std::size_t k,
                                                std::mt19937_64& rng) {
  std::vector<std::size_t> all(universe);
  for (std::size_t i = 0; i < universe; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

inline std::string make_sentence(std::size_t words,
                                 const std::vector<std::string>& skill_words,
                                 const SynthConfig& cfg, std::mt19937_64& rng) {
  std::vector<std::string> toks = skill_words;
  std::uniform_int_distribution<std::size_t> filler(0, cfg.filler_vocabulary - 1);
  while (toks.size() < words) toks.push_back("w" + std::to_string(filler(rng)));
  std::shuffle(toks.begin(), toks.end(), rng);
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace detail

inline SynthCorpus synth_generate(const SynthConfig& cfg) {
  if (cfg.num_skills < 2) {
    throw std::invalid_argument("synth: need at least 2 skills");
  }
  if (cfg.overlap_threshold == 0 ||
      cfg.overlap_threshold > std::min(cfg.skills_per_job, cfg.skills_per_resume)) {
    throw std::invalid_argument(
        "synth: overlap threshold exceeds the skills per entity");
  }
  if (cfg.skills_per_job > cfg.num_skills ||
      cfg.skills_per_resume > cfg.num_skills ||
      cfg.mentions_per_skill == 0 ||
      cfg.skills_per_job * cfg.mentions_per_skill > cfg.requirements_per_job ||
      cfg.skills_per_resume * cfg.mentions_per_skill > cfg.experiences_per_resume) {
    throw std::invalid_argument("synth: infeasible skills per entity");
  }
  if (cfg.skill_words_per_sentence > cfg.words_per_requirement ||
      cfg.skill_words_per_sentence > cfg.words_per_experience ||
      cfg.skill_pool_size == 0 || cfg.filler_vocabulary == 0) {
    throw std::invalid_argument("synth: infeasible sentence layout");
  }
  if (cfg.applications_per_resume > cfg.num_jobs) {
    throw std::invalid_argument("synth: more applications than jobs");
  }
  std::mt19937_64 rng(cfg.seed);
  const auto hidden_count = static_cast<std::size_t>(
      std::llround(cfg.hidden_skill_fraction * static_cast<double>(cfg.num_skills)));
  auto is_hidden = [&](std::size_t s) { return s >= cfg.num_skills - hidden_count; };
  auto skill_words = [&](std::size_t s) {
    std::uniform_int_distribution<std::size_t> pick(0, cfg.skill_pool_size - 1);
    std::vector<std::string> w;
    for (std::size_t i = 0; i < cfg.skill_words_per_sentence; ++i) {
      w.push_back(is_hidden(s) ? "h" + std::to_string(pick(rng))
                               : "s" + std::to_string(s) + "x" +
                                     std::to_string(pick(rng)));
    }
    return w;
  };
  auto make_doc = [&](const std::string& id,
                      const std::vector<std::size_t>& skills,
                      std::size_t sentences, std::size_t words) {
    Document d{id, {}};
    for (std::size_t i = 0; i < sentences; ++i) {
      std::vector<std::string> sw;
      if (i < skills.size() * cfg.mentions_per_skill)
        sw = skill_words(skills[i % skills.size()]);
      d.sentences.push_back(detail::make_sentence(words, sw, cfg, rng));
    }
    std::shuffle(d.sentences.begin(), d.sentences.end(), rng);
    return d;
  };

  SynthCorpus out;
  for (std::size_t j = 0; j < cfg.num_jobs; ++j) {
    const std::string id = "J" + std::to_string(j);
    auto skills = detail::sample_distinct(cfg.num_skills, cfg.skills_per_job, rng);
    out.corpus.jobs.push_back(make_doc(id, skills, cfg.requirements_per_job,
                                       cfg.words_per_requirement));
    out.job_skills[id] = skills;
  }
  for (std::size_t r = 0; r < cfg.num_resumes; ++r) {
    const std::string id = "R" + std::to_string(r);
    auto skills =
        detail::sample_distinct(cfg.num_skills, cfg.skills_per_resume, rng);
    out.corpus.resumes.push_back(make_doc(id, skills,
                                          cfg.experiences_per_resume,
                                          cfg.words_per_experience));
    out.resume_skills[id] = skills;
  }
  std::bernoulli_distribution want_match(cfg.match_rate);
  std::bernoulli_distribution flip(cfg.noise);
  std::bernoulli_distribution browsed_only(cfg.browsed_only_rate);
  for (const auto& resume : out.corpus.resumes) {
    std::vector<std::size_t> matching, other;
    for (std::size_t j = 0; j < cfg.num_jobs; ++j) {
      const bool m = out.overlap(out.corpus.jobs[j].id, resume.id) >=
                     cfg.overlap_threshold;
      (m ? matching : other).push_back(j);
    }
    std::shuffle(matching.begin(), matching.end(), rng);
    std::shuffle(other.begin(), other.end(), rng);
    std::size_t mi = 0, oi = 0;
    for (std::size_t a = 0; a < cfg.applications_per_resume; ++a) {
      const bool take_match =
          (want_match(rng) && mi < matching.size()) || oi >= other.size();
      const std::size_t j = take_match ? matching[mi++] : other[oi++];
      const std::string& job = out.corpus.jobs[j].id;
      Application app{job, resume.id, true, true, false};
      if (browsed_only(rng)) {
        app.delivered = false;
      } else {
        bool y = out.overlap(job, resume.id) >= cfg.overlap_threshold;
        if (flip(rng)) y = !y;
        app.satisfied = y;
      }
      out.corpus.applications.push_back(std::move(app));
    }
  }
  return out;
}

}  // namespace pjfcann
