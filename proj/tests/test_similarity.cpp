#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pjfcann/similarity.hpp"

using namespace pjfcann;

namespace {

// <pad>, <unk>, a, b, c with hand-set 2-d word vectors.
Vocabulary abc() { return Vocabulary::from_tokens({"<pad>", "<unk>", "a", "b", "c"}); }

Tensor abc_vectors() {
  return Tensor::matrix(5, 2, {0, 0, 0, 0, 0, 0, 3, 4, 0, 1});
}

SimilarityFunction make(SimilarityKind k, SimilarityOptions o = {}) {
  return SimilarityFunction(k, abc(), o, abc_vectors());
}

double cos2(double x0, double y0, double x1, double y1) {
  return (x0 * x1 + y0 * y1) / (std::hypot(x0, y0) * std::hypot(x1, y1));
}

}  // namespace

TEST(Similarity, ParsesAllSixNames) {
  for (auto k : all_similarity_kinds()) EXPECT_EQ(parse_similarity(similarity_name(k)), k);
  EXPECT_EQ(all_similarity_kinds().size(), 6u);
  EXPECT_THROW(parse_similarity("bm25"), std::invalid_argument);
}

TEST(Similarity, MeanIsCosineOfAverages) {
  auto f = make(SimilarityKind::kMean);
  // {b, c} -> (1.5, 2.5); {b} -> (3, 4)
  EXPECT_NEAR(f.similarity({"b", "c"}, {"b"}), cos2(1.5, 2.5, 3, 4), 1e-15);
  EXPECT_NEAR(f.similarity({"c"}, {"c", "c"}), 1.0, 1e-15);
  EXPECT_EQ(f.similarity({"a"}, {"b"}), 0.0);  // zero vector
}

TEST(Similarity, TfIdfWeightsByInverseDocumentFrequency) {
  auto f = make(SimilarityKind::kTfIdf);
  EXPECT_THROW(f.represent({"b"}), std::logic_error);
  f.fit({{"b", "c"}, {"b"}});
  const double idf_b = std::log(3.0 / 3.0) + 1.0;
  const double idf_c = std::log(3.0 / 2.0) + 1.0;
  const Tensor v = f.represent({"b", "c"}).vector;
  EXPECT_NEAR(v[0], (idf_b * 3 + idf_c * 0) / 2, 1e-15);
  EXPECT_NEAR(v[1], (idf_b * 4 + idf_c * 1) / 2, 1e-15);
}

TEST(Similarity, SifWeightsWithoutComponentRemoval) {
  SimilarityOptions o;
  o.sif_a = 0.5;
  o.sif_remove_pc = false;
  auto f = make(SimilarityKind::kSif, o);
  f.fit({{"b", "c", "c", "c"}});
  const double wb = 0.5 / (0.5 + 0.25), wc = 0.5 / (0.5 + 0.75);
  const Tensor v = f.represent({"b", "c"}).vector;
  EXPECT_NEAR(v[0], wb * 3 / 2, 1e-15);
  EXPECT_NEAR(v[1], (wb * 4 + wc * 1) / 2, 1e-15);
}

TEST(Similarity, SifRemovesLeadingComponent) {
  SimilarityOptions o;
  o.sif_a = 1.0;
  auto f = make(SimilarityKind::kSif, o);
  const std::vector<TokenSentence> docs{{"b"}, {"c"}, {"b", "c"}};
  f.fit(docs);
  // oracle: weighted averages, then the top eigenvector of the 2x2 scatter
  const double n = 4.0, pb = 2 / n, pc = 2 / n;
  const double wb = 1 / (1 + pb), wc = 1 / (1 + pc);
  const double rows[3][2] = {{wb * 3, wb * 4}, {0, wc}, {wb * 3 / 2, (wb * 4 + wc) / 2}};
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& r : rows) {
    sxx += r[0] * r[0];
    sxy += r[0] * r[1];
    syy += r[1] * r[1];
  }
  const double lambda = 0.5 * (sxx + syy + std::sqrt((sxx - syy) * (sxx - syy) + 4 * sxy * sxy));
  double ux = sxy, uy = lambda - sxx;
  const double norm = std::hypot(ux, uy);
  ux /= norm;
  uy /= norm;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Tensor v = f.represent(docs[i]).vector;
    const double proj = rows[i][0] * ux + rows[i][1] * uy;
    EXPECT_NEAR(v[0], rows[i][0] - proj * ux, 1e-10);
    EXPECT_NEAR(v[1], rows[i][1] - proj * uy, 1e-10);
  }
}

TEST(Similarity, RelaxedWmdTakesTheLargerOneSidedCost) {
  auto f = make(SimilarityKind::kWmd);
  const std::size_t a = 2, b = 3, c = 4;
  // {a} -> nearest of {b, c} is c at distance 1.
  // {b, c} -> a: half mass at 5, half at 1.
  EXPECT_NEAR(f.relaxed_wmd({a}, {b, c}), 3.0, 1e-15);
  EXPECT_NEAR(f.similarity({"a"}, {"b", "c"}), 0.25, 1e-15);
  EXPECT_NEAR(f.similarity({"b", "c"}, {"c", "b"}), 1.0, 1e-15);
}

TEST(Similarity, EmptyDocumentsAreRejected) {
  auto f = make(SimilarityKind::kMean);
  EXPECT_THROW(f.represent({}), std::invalid_argument);
  EXPECT_THROW(f.match_probability({"a"}, {"b"}), std::logic_error);
}

TEST(Similarity, EncoderCosineIsSeededAndReflexive) {
  auto f = make(SimilarityKind::kEncoderCosine);
  auto g = make(SimilarityKind::kEncoderCosine);
  EXPECT_NEAR(f.similarity({"a", "b"}, {"a", "b"}), 1.0, 1e-12);
  EXPECT_EQ(f.similarity({"a", "b"}, {"c"}), g.similarity({"a", "b"}, {"c"}));
}

TEST(Similarity, JsonRoundTripPreservesScores) {
  for (auto k : all_similarity_kinds()) {
    auto f = make(k);
    if (f.needs_fit()) f.fit({{"b", "c"}, {"a", "b"}, {"c"}});
    auto g = SimilarityFunction::from_json(nlohmann::json::parse(f.to_json().dump()));
    EXPECT_EQ(f.similarity({"b", "c"}, {"a", "c"}), g.similarity({"b", "c"}, {"a", "c"}))
        << similarity_name(k);
  }
}

TEST(Similarity, SupervisedEncoderSeparatesClusters) {
  // two clusters of documents drawn from disjoint token pools
  std::vector<std::string> tokens{"<pad>", "<unk>"};
  for (int i = 0; i < 12; ++i) tokens.push_back("t" + std::to_string(10 + i));
  Vocabulary vocab = Vocabulary::from_tokens(tokens);
  std::mt19937_64 rng(3);
  auto doc = [&](int cluster) {
    std::uniform_int_distribution<std::size_t> pick(0, 5);
    std::vector<std::size_t> d;
    for (int i = 0; i < 5; ++i) d.push_back(2 + 6 * cluster + pick(rng));
    return d;
  };
  std::vector<SimilarityTrainingPair> pairs;
  for (int i = 0; i < 200; ++i) {
    const int c = i % 2;
    const bool same = (i / 2) % 2 == 0;
    pairs.push_back({doc(c), doc(same ? c : 1 - c), same ? 1 : 0});
  }
  SimilarityFunction f(SimilarityKind::kSupervised, vocab);
  SimilarityTrainingConfig cfg;
  cfg.epochs = 6;
  cfg.learning_rate = 1e-2;
  auto report = f.train(pairs, cfg);
  EXPECT_EQ(report.valid_pairs, 40u);
  EXPECT_EQ(report.epoch_loss.size(), 6u);
  EXPECT_GT(report.valid_accuracy, 0.8);
  EXPECT_LT(report.epoch_loss.back(), report.epoch_loss.front());
}

TEST(Similarity, TrainingNeedsBothClasses) {
  SimilarityFunction f(SimilarityKind::kSupervised, abc());
  EXPECT_THROW(f.train({{{2}, {3}, 1}}, {}), std::invalid_argument);
  auto m = make(SimilarityKind::kMean);
  EXPECT_THROW(m.train({{{2}, {3}, 1}, {{2}, {4}, 0}}, {}), std::logic_error);
}
