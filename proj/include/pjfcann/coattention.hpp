// Local semantic matching between requirement and experience vectors.
//
// Rows of the attended-job matrix are indexed by experience l (each one a
// mixture of requirement vectors), so requirement-side pooling runs over the
// n experiences, and resume-side pooling over the m requirements.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "pjfcann/ops.hpp"
#include "pjfcann/parameter.hpp"

namespace pjfcann {

struct CoAttentionParams {
  Parameter* w1 = nullptr;
  Parameter* u1 = nullptr;
  Parameter* v1 = nullptr;
  Parameter* w2 = nullptr;
  Parameter* u2 = nullptr;
  Parameter* v2 = nullptr;
  Parameter* w3 = nullptr;
  Parameter* b3 = nullptr;
  Parameter* v_zeta = nullptr;
  Parameter* w4 = nullptr;
  Parameter* b4 = nullptr;
  Parameter* v_mu = nullptr;

  static CoAttentionParams create(ParameterStore& store,
                                  const std::string& prefix, std::size_t d,
                                  double stddev, std::mt19937_64& rng) {
    auto mat = [&](const char* n) {
      return &store.add_gaussian(prefix + "." + n, {d, d}, stddev, rng);
    };
    auto vec = [&](const char* n) {
      return &store.add_gaussian(prefix + "." + n, {d}, stddev, rng);
    };
    CoAttentionParams p;
    p.w1 = mat("W1");
    p.u1 = mat("U1");
    p.v1 = vec("v1");
    p.w2 = mat("W2");
    p.u2 = mat("U2");
    p.v2 = vec("v2");
    p.w3 = mat("W3");
    p.b3 = vec("b3");
    p.v_zeta = vec("v_zeta");
    p.w4 = mat("W4");
    p.b4 = vec("b4");
    p.v_mu = vec("v_mu");
    return p;
  }
};

struct CrossAttention {
  Var attended_job;     // h^J [n x d], row l mixes requirements for experience l
  Var attended_resume;  // h^R [m x d], row k mixes experiences for requirement k
  Var eta;              // [n x m], rows sum to 1
  Var epsilon;          // [m x n], rows sum to 1
};

struct LocalRepresentation {
  Var job;     // H^J_local [d]
  Var resume;  // H^R_local [d]
  Var zeta;    // [n]
  Var mu;      // [m]
  Var eta;
  Var epsilon;
};

namespace detail {

// scores[l][k] = vᵀ tanh(left_l + right_k) for left [n x d], right [m x d];
// returned as [n x m].
inline Var additive_scores(Var left, Var right, Var v) {
  const std::size_t n = left.shape()[0];
  const std::size_t m = right.shape()[0];
  std::vector<std::size_t> li, ri;
  li.reserve(n * m);
  ri.reserve(n * m);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t k = 0; k < m; ++k) {
      li.push_back(l);
      ri.push_back(k);
    }
  }
  Var pairs = ops::add(ops::gather_rows(left, li), ops::gather_rows(right, ri));
  Var flat = ops::matmul(ops::tanh(pairs), v);
  return ops::reshape(flat, {n, m});
}

}  // namespace detail

/// requirements h_j [m x d], experiences h_r [n x d].
inline CrossAttention cross_attend(Tape& tape, Var requirements,
                                   Var experiences,
                                   const CoAttentionParams& p) {
  const Shape& sj = requirements.shape();
  const Shape& sr = experiences.shape();
  if (sj.size() != 2 || sr.size() != 2 || sj[1] != sr[1]) {
    throw ShapeError("cross_attend: shape mismatch " + shape_string(sj) +
                     " vs " + shape_string(sr));
  }
  // e_{l,k} = v1ᵀ tanh(W1 h_{r,l} + U1 h_{j,k}); softmax over k.
  Var eta = ops::softmax(detail::additive_scores(
      ops::linear(experiences, tape.param(*p.w1)),
      ops::linear(requirements, tape.param(*p.u1)), tape.param(*p.v1)));
  // e_{k,l} = v2ᵀ tanh(W2 h_{j,k} + U2 h_{r,l}); softmax over l.
  Var epsilon = ops::softmax(detail::additive_scores(
      ops::linear(requirements, tape.param(*p.w2)),
      ops::linear(experiences, tape.param(*p.u2)), tape.param(*p.v2)));
  return {ops::matmul(eta, requirements), ops::matmul(epsilon, experiences),
          eta, epsilon};
}

namespace detail {
inline std::pair<Var, Var> importance_pool(Tape& tape, Var rows, Parameter& w,
                                           Parameter& b, Parameter& v) {
  Var scores = ops::matmul(ops::tanh(ops::linear(rows, tape.param(w),
                                                 tape.param(b))),
                           tape.param(v));
  Var weights = ops::softmax(scores);
  return {ops::matmul(weights, rows), weights};
}
}  // namespace detail

inline LocalRepresentation pool_local(Tape& tape, const CrossAttention& cross,
                                      const CoAttentionParams& p) {
  auto [job, zeta] =
      detail::importance_pool(tape, cross.attended_job, *p.w3, *p.b3, *p.v_zeta);
  auto [resume, mu] = detail::importance_pool(tape, cross.attended_resume,
                                              *p.w4, *p.b4, *p.v_mu);
  return {job, resume, zeta, mu, cross.eta, cross.epsilon};
}

inline LocalRepresentation local_match(Tape& tape, Var requirements,
                                       Var experiences,
                                       const CoAttentionParams& p) {
  return pool_local(tape, cross_attend(tape, requirements, experiences, p), p);
}

}  // namespace pjfcann
