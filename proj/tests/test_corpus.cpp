#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "pjfcann/corpus.hpp"

using namespace pjfcann;

namespace {

std::string words(std::size_t n, const std::string& w = "x") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
  return s;
}

Corpus parse(const std::string& text) {
  std::istringstream is(text);
  return load_corpus(is);
}

std::vector<LabeledPair> random_pairs(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.35);
  std::vector<LabeledPair> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"J" + std::to_string(i % 17), "R" + std::to_string(i), coin(rng) ? 1 : 0});
  return out;
}

}  // namespace

TEST(Corpus, JsonLinesRoundTrip) {
  SynthConfig c;
  c.num_jobs = 5;
  c.num_resumes = 4;
  c.applications_per_resume = 3;
  auto corpus = synth_generate(c).corpus;
  std::stringstream ss;
  save_corpus(corpus, ss);
  EXPECT_EQ(load_corpus(ss), corpus);
}

TEST(Corpus, AcceptsBooleanAndIntegerFlags) {
  auto c = parse(
      R"({"kind":"job","id":"J1","requirements":["a b"]})"
      "\n\n"
      R"({"kind":"resume","id":"R1","experiences":["c"]})"
      "\n"
      R"({"kind":"application","job":"J1","resume":"R1","browsed":true,"delivered":1,"satisfied":0})");
  ASSERT_EQ(c.applications.size(), 1u);
  EXPECT_TRUE(c.applications[0].browsed);
  EXPECT_TRUE(c.applications[0].delivered);
  EXPECT_FALSE(c.applications[0].satisfied);
}

TEST(Corpus, ReportsLineOfBadRecords) {
  const std::string job = R"({"kind":"job","id":"J1","requirements":["a"]})";
  try {
    parse(job + "\n{not json");
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse(R"({"kind":"offer"})"), CorpusError);
  EXPECT_THROW(parse(job + "\n" + job), CorpusError);
  EXPECT_THROW(parse(job + "\n" + R"({"kind":"application","job":"J1","resume":"R9"})"),
               CorpusError);
  EXPECT_THROW(parse(job + "\n" + R"({"kind":"resume","id":"R1","experiences":["a"]})" + "\n" +
                     R"({"kind":"application","job":"J1","resume":"R1","satisfied":2})"),
               CorpusError);
}

TEST(Labels, SatisfiedThenDelivered) {
  EXPECT_EQ(derive_label({"j", "r", true, true, true}), 1);
  EXPECT_EQ(derive_label({"j", "r", true, true, false}), 0);
  EXPECT_EQ(derive_label({"j", "r", true, false, false}), std::nullopt);
  EXPECT_EQ(derive_label({"j", "r", false, false, true}), 1);
}

TEST(Filter, DropsShortTruncatesLongAndPrunesUnhired) {
  Corpus c;
  c.jobs = {{"J1", {words(40), words(20)}},  // 60 words, truncated
            {"J2", {words(10)}},             // too short
            {"J3", {words(55)}}};            // never hired
  c.resumes = {{"R1", {words(15)}}, {"R2", {words(14)}}, {"R3", {words(20)}}};
  c.applications = {{"J1", "R1", true, true, true},
                    {"J2", "R1", true, true, true},
                    {"J1", "R2", true, true, true},
                    {"J3", "R3", true, true, false},
                    {"J1", "R3", true, true, true}};
  FilterConfig cfg;
  cfg.max_job_words = 45;
  auto f = filter_corpus(c, cfg);
  ASSERT_EQ(f.jobs.size(), 1u);
  EXPECT_EQ(f.jobs[0].id, "J1");
  EXPECT_EQ(f.jobs[0].words(), 45u);
  EXPECT_EQ(f.jobs[0].sentences[0], words(40));
  std::vector<std::string> resumes;
  for (const auto& r : f.resumes) resumes.push_back(r.id);
  EXPECT_EQ(resumes, (std::vector<std::string>{"R1", "R3"}));
  EXPECT_EQ(f.applications.size(), 2u);
  EXPECT_NO_THROW(f.validate());
}

TEST(Split, PiecesAreDisjointBalancedAndAssigned) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto pairs = random_pairs(rng, 60 + 13 * trial);
    auto plan = make_split(pairs, trial, {});
    ASSERT_EQ(plan.pieces.size(), 10u);
    std::set<LabeledPair> seen;
    std::size_t min_size = 1u << 30, max_size = 0;
    for (const auto& piece : plan.pieces) {
      std::size_t pos = 0;
      for (const auto& p : piece) {
        EXPECT_TRUE(seen.insert(p).second);
        pos += p.label;
      }
      EXPECT_EQ(2 * pos, piece.size());
      min_size = std::min(min_size, piece.size());
      max_size = std::max(max_size, piece.size());
    }
    EXPECT_LE(max_size - min_size, 2u);
    EXPECT_EQ(std::count(plan.roles.begin(), plan.roles.end(), PieceRole::kHistory), 5);
    EXPECT_EQ(std::count(plan.roles.begin(), plan.roles.end(), PieceRole::kTrain), 4);
    EXPECT_EQ(std::count(plan.roles.begin(), plan.roles.end(), PieceRole::kTest), 1);
    std::set<LabeledPair> test(plan.test.begin(), plan.test.end());
    for (const auto& h : plan.history) {
      EXPECT_EQ(h.label, 1);
      EXPECT_FALSE(test.count(h));
    }
    std::size_t train_pieces = 0;
    for (std::size_t i = 0; i < 10; ++i)
      if (plan.roles[i] == PieceRole::kTrain) train_pieces += plan.pieces[i].size();
    EXPECT_EQ(plan.train.size() + plan.valid.size(), train_pieces);
  }
}

TEST(Split, SeededAndConfigurable) {
  std::mt19937_64 rng(2);
  auto pairs = random_pairs(rng, 200);
  auto a = make_split(pairs, 7), b = make_split(pairs, 7), c = make_split(pairs, 8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
  SplitConfig cfg;
  cfg.history_pieces = 8;
  auto d = make_split(pairs, 7, cfg);
  EXPECT_EQ(std::count(d.roles.begin(), d.roles.end(), PieceRole::kTrain), 1);
  cfg.history_pieces = 9;
  EXPECT_THROW(make_split(pairs, 7, cfg), std::invalid_argument);
  EXPECT_THROW(make_split({{"j", "r", 1}}, 7), std::invalid_argument);
}

TEST(Synth, NoiselessLabelsFollowSkillOverlap) {
  SynthConfig c;
  c.noise = 0.0;
  c.num_resumes = 60;
  auto s = synth_generate(c);
  EXPECT_NO_THROW(s.corpus.validate());
  std::size_t labeled = 0, positives = 0;
  for (const auto& a : s.corpus.applications) {
    auto y = derive_label(a);
    if (!y) continue;
    ++labeled;
    positives += *y;
    EXPECT_EQ(*y == 1, s.overlap(a.job, a.resume) >= c.overlap_threshold);
  }
  EXPECT_GT(labeled, 0u);
  EXPECT_GT(positives, labeled / 4);
}

TEST(Synth, NoiseFlipsAboutTheRequestedShare) {
  SynthConfig c;
  c.noise = 0.2;
  auto s = synth_generate(c);
  double flipped = 0, labeled = 0;
  for (const auto& a : s.corpus.applications) {
    auto y = derive_label(a);
    if (!y) continue;
    ++labeled;
    flipped += (*y == 1) != (s.overlap(a.job, a.resume) >= 1);
  }
  EXPECT_NEAR(flipped / labeled, 0.2, 0.03);
}

TEST(Synth, HiddenSkillsShareOnePool) {
  SynthConfig c;
  c.num_skills = 4;
  c.hidden_skill_fraction = 0.5;
  c.num_resumes = 20;
  auto s = synth_generate(c);
  for (const auto& r : s.corpus.resumes) {
    const bool hidden = s.resume_skills.at(r.id)[0] >= 2;
    bool saw_h = false, saw_s = false;
    for (const auto& t : r.tokens()) {
      saw_h |= t[0] == 'h';
      saw_s |= t[0] == 's';
    }
    EXPECT_EQ(saw_h, hidden) << r.id;
    EXPECT_EQ(saw_s, !hidden) << r.id;
  }
}

TEST(Synth, SeededAndValidated) {
  SynthConfig c;
  c.num_resumes = 10;
  EXPECT_EQ(synth_generate(c).corpus, synth_generate(c).corpus);
  c.mentions_per_skill = 10;
  EXPECT_THROW(synth_generate(c), std::invalid_argument);
  c = {};
  c.applications_per_resume = c.num_jobs + 1;
  EXPECT_THROW(synth_generate(c), std::invalid_argument);
}
