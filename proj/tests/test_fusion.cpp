#include <gtest/gtest.h>

#include <numeric>

#include "helpers.hpp"
#include "pjfcann/fusion.hpp"

using namespace pjfcann;
using helpers::max_abs_diff;
using helpers::to_mat;
using helpers::to_vec;

namespace {

struct Fixture {
  std::mt19937_64 rng{31};
  ParameterStore store;
  FusionParams p = FusionParams::create(store, "fusion", 3, 0.6, rng);
  Tensor job = helpers::random_tensor({3, 3}, rng);
  Tensor resume = helpers::random_tensor({4, 3}, rng);
};

struct AttendOracle {
  oracle::Vec vector, weights;
};

AttendOracle attend(const oracle::Mat& states, const oracle::Vec& query, const Parameter* v,
                    const Parameter* w, const Parameter* u) {
  const auto wq = oracle::matvec(to_mat(w), query);
  oracle::Vec scores;
  for (const auto& s : states) {
    auto a = oracle::matvec(to_mat(u), s);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::tanh(a[k] + wq[k]);
    scores.push_back(oracle::dot(to_vec(v), a));
  }
  AttendOracle r;
  r.weights = oracle::softmax(scores);
  r.vector = oracle::weighted_rows(r.weights, states);
  return r;
}

oracle::Vec fuse(const oracle::Vec& node0, const oracle::Vec& e, const Parameter* w,
                 const Parameter* b) {
  oracle::Vec in = node0;
  in.insert(in.end(), e.begin(), e.end());
  auto out = oracle::matvec(to_mat(w), in);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::tanh(out[k] + b->value[k]);
  return out;
}

}  // namespace

TEST(SoftMap, MatchesOracleWithAndWithoutNormalization) {
  Fixture f;
  for (bool normalize : {false, true}) {
    Tape t;
    auto m = soft_map(t, t.constant(f.job), *f.p.v_j, *f.p.w_j, *f.p.c, normalize);
    auto o = oracle::soft_map(to_mat(f.job), to_vec(f.p.v_j), to_mat(f.p.w_j), to_vec(f.p.c),
                              normalize);
    ASSERT_TRUE(m.weights.has_value());
    EXPECT_LT(max_abs_diff(to_vec(m.weights->value()), o.weights), 1e-15);
    EXPECT_LT(max_abs_diff(to_vec(m.vector.value()), o.vector), 1e-15);
  }
}

TEST(SoftMap, IsolatedNodeMapsToZero) {
  Fixture f;
  Tape t;
  auto m = soft_map(t, t.constant(Tensor::matrix(1, 3, {1, 2, 3})), *f.p.v_j, *f.p.w_j, *f.p.c);
  EXPECT_FALSE(m.weights.has_value());
  EXPECT_EQ(m.vector.value().data, (std::vector<double>{0, 0, 0}));
}

TEST(ExperienceAttend, WeightsSumToOne) {
  Fixture f;
  Tape t;
  auto a = experience_attend(t, t.constant(f.resume), t.constant(Tensor::vector({1, -1, 0.5})),
                             *f.p.v_delta, *f.p.w_delta, *f.p.u_delta);
  const auto& w = a.weights.value().data;
  EXPECT_EQ(w.size(), 4u);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
}

TEST(GlobalRelations, CrossWiredOracle) {
  Fixture f;
  Tape t;
  auto g = global_relations(t, t.constant(f.job), t.constant(f.resume), f.p);
  const auto J = to_mat(f.job), R = to_mat(f.resume);
  auto vr = oracle::soft_map(J, to_vec(f.p.v_j), to_mat(f.p.w_j), to_vec(f.p.c), false);
  auto vj = oracle::soft_map(R, to_vec(f.p.q_r), to_mat(f.p.w_r), to_vec(f.p.c), false);
  // the resume-side map steers job attention and vice versa
  auto ej = attend(J, vj.vector, f.p.v_beta, f.p.w_beta, f.p.u_beta);
  auto er = attend(R, vr.vector, f.p.v_delta, f.p.w_delta, f.p.u_delta);
  EXPECT_LT(max_abs_diff(to_vec(g.beta.value()), ej.weights), 1e-15);
  EXPECT_LT(max_abs_diff(to_vec(g.delta.value()), er.weights), 1e-15);
  EXPECT_LT(max_abs_diff(to_vec(g.job.value()), fuse(J[0], ej.vector, f.p.out_j, f.p.bias_j)),
            1e-15);
  EXPECT_LT(
      max_abs_diff(to_vec(g.resume.value()), fuse(R[0], er.vector, f.p.out_r, f.p.bias_r)),
      1e-15);
}

TEST(GlobalRelations, InvariantToRelatedNodeOrder) {
  Fixture f;
  auto run = [&](const Tensor& j, const Tensor& r) {
    Tape t;
    auto g = global_relations(t, t.constant(j), t.constant(r), f.p);
    return std::make_pair(g.job.value().data, g.resume.value().data);
  };
  auto base = run(f.job, f.resume);
  Tensor j = f.job, r = f.resume;
  for (std::size_t k = 0; k < 3; ++k) {
    std::swap(j.at(1, k), j.at(2, k));
    std::swap(r.at(1, k), r.at(3, k));
  }
  auto perm = run(j, r);
  EXPECT_LT(max_abs_diff(base.first, perm.first), 1e-14);
  EXPECT_LT(max_abs_diff(base.second, perm.second), 1e-14);
}
