#include <gtest/gtest.h>

#include "helpers.hpp"
#include "pjfcann/ggnn.hpp"

using namespace pjfcann;
using helpers::max_abs_diff;
using helpers::to_mat;
using helpers::to_vec;

namespace {

oracle::GgnnWeights weights_of(const GgnnLayerParams& p) {
  return {to_mat(p.h),   to_vec(p.b),   to_mat(p.w_z), to_mat(p.m_z), to_mat(p.w_r),
          to_mat(p.m_r), to_mat(p.w_h), to_mat(p.m_h)};
}

}  // namespace

TEST(Ggnn, TwoNodeHandSetMatchesOracle) {
  ParameterStore store;
  GgnnLayerParams p;
  p.h = &store.add("H", Tensor::matrix(2, 2, {0.5, -0.2, 0.1, 0.3}));
  p.b = &store.add("b", Tensor::vector({0.05, -0.1}));
  p.w_z = &store.add("W_z", Tensor::matrix(2, 2, {0.4, 0.1, -0.3, 0.2}));
  p.m_z = &store.add("M_z", Tensor::matrix(2, 2, {-0.1, 0.6, 0.2, 0.1}));
  p.w_r = &store.add("W_r", Tensor::matrix(2, 2, {0.3, -0.5, 0.7, 0.2}));
  p.m_r = &store.add("M_r", Tensor::matrix(2, 2, {0.2, 0.2, -0.4, 0.9}));
  p.w_h = &store.add("W_h", Tensor::matrix(2, 2, {0.8, 0.1, 0.0, -0.6}));
  p.m_h = &store.add("M_h", Tensor::matrix(2, 2, {-0.3, 0.4, 0.5, 0.25}));
  GgnnParams net{{p}};
  const Tensor G = Tensor::matrix(2, 2, {0.9, -0.4, 0.2, 0.7});
  const Tensor A = Tensor::matrix(2, 2, {0, 0.6, 0.6, 0});
  Tape t;
  const Tensor& out = run_ggnn(t, t.constant(G), t.constant(A), net).value();
  const auto expect = oracle::ggnn(to_mat(G), to_mat(A), {weights_of(p)});
  EXPECT_LT(max_abs_diff(to_mat(out), expect), 1e-15);
}

TEST(Ggnn, MultiStepMatchesOracle) {
  std::mt19937_64 rng(12);
  ParameterStore store;
  auto net = GgnnParams::create(store, "g", 3, 3, 0.6, rng);
  Tensor G = helpers::random_tensor({4, 3}, rng);
  Tensor A = helpers::random_tensor({4, 4}, rng, 0, 1);
  Tape t;
  const Tensor& out = run_ggnn(t, t.constant(G), t.constant(A), net).value();
  std::vector<oracle::GgnnWeights> w;
  for (const auto& l : net.layers) w.push_back(weights_of(l));
  EXPECT_LT(max_abs_diff(to_mat(out), oracle::ggnn(to_mat(G), to_mat(A), w)), 1e-14);
}

TEST(Ggnn, ClosedUpdateGateKeepsStates) {
  std::mt19937_64 rng(5);
  ParameterStore store;
  auto net = GgnnParams::create(store, "g", 2, 2, 0.6, rng);
  Tensor G = helpers::random_tensor({3, 2}, rng);
  Tensor A = helpers::random_tensor({3, 3}, rng);
  Tape t;
  GgnnHooks hooks;
  hooks.close_update_gate = true;
  EXPECT_EQ(run_ggnn(t, t.constant(G), t.constant(A), net, hooks).value().data, G.data);
}

TEST(Ggnn, RelabellingNodesPermutesOutput) {
  std::mt19937_64 rng(9);
  ParameterStore store;
  auto net = GgnnParams::create(store, "g", 3, 1, 0.6, rng);
  Tensor G = helpers::random_tensor({3, 3}, rng);
  Tensor A = helpers::random_tensor({3, 3}, rng);
  const std::vector<std::size_t> perm{2, 0, 1};
  Tensor Gp({3, 3}), Ap({3, 3});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      Gp.at(i, k) = G.at(perm[i], k);
      Ap.at(i, k) = A.at(perm[i], perm[k]);
    }
  }
  Tape t;
  const Tensor out = run_ggnn(t, t.constant(G), t.constant(A), net).value();
  const Tensor outp = run_ggnn(t, t.constant(Gp), t.constant(Ap), net).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(outp.at(i, k), out.at(perm[i], k), 1e-14);
}

TEST(Ggnn, RejectsMismatchedAdjacency) {
  std::mt19937_64 rng(5);
  ParameterStore store;
  auto net = GgnnParams::create(store, "g", 2, 1, 0.6, rng);
  Tape t;
  EXPECT_THROW(run_ggnn(t, t.constant(Tensor({3, 2})), t.constant(Tensor({2, 2})), net),
               ShapeError);
}

TEST(EntityTable, UnknownIdsShareTheColdRow) {
  std::mt19937_64 rng(1);
  ParameterStore store;
  EntityTable table(store, "jobs", {"j1", "j2"}, 3, 0.5, rng);
  EXPECT_EQ(table.parameter().value.shape, (Shape{3, 3}));
  EXPECT_EQ(table.row("j2"), 1u);
  EXPECT_EQ(table.row("zz"), table.cold_row());
  EXPECT_THROW(table.row_strict("zz"), std::out_of_range);
  Tape t;
  const Tensor rows = table.lookup(t, {"zz", "j1"}).value();
  EXPECT_EQ(rows.row(0).data, table.parameter().value.row(2).data);
  EXPECT_EQ(rows.row(1).data, table.parameter().value.row(0).data);
  EXPECT_THROW(EntityTable(store, "dup", {"a", "a"}, 2, 0.5, rng), std::invalid_argument);
}
