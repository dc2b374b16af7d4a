// Global relation features from the propagated job and resume graphs.
//
// Each graph's related nodes (rows 1..q) are mapped to one vector by a soft
// gate, and that vector steers attention over the other graph's nodes:
//   V_R = Σ_i α_i g^J_i,  α_i = v_jᵀ σ(W_j g^J_i + c)
//   V_J = Σ_i γ_i g^R_i,  γ_i = q_rᵀ σ(W_r g^R_i + c)
//   e^J = Σ_t β_t g^J_t,  β = softmax_t(v_βᵀ tanh(W_β V_J + U_β g^J_t))
//   e^R = Σ_t δ_t g^R_t,  δ = softmax_t(v_δᵀ tanh(W_δ V_R + U_δ g^R_t))
//   H^J = tanh(W_J [g^J_0; e^J] + b_J), H^R likewise.
#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pjfcann/ops.hpp"
#include "pjfcann/parameter.hpp"

namespace pjfcann {

struct FusionParams {
  Parameter* v_j = nullptr;
  Parameter* w_j = nullptr;
  Parameter* q_r = nullptr;
  Parameter* w_r = nullptr;
  Parameter* c = nullptr;
  Parameter* v_beta = nullptr;
  Parameter* w_beta = nullptr;
  Parameter* u_beta = nullptr;
  Parameter* v_delta = nullptr;
  Parameter* w_delta = nullptr;
  Parameter* u_delta = nullptr;
  Parameter* out_j = nullptr;
  Parameter* bias_j = nullptr;
  Parameter* out_r = nullptr;
  Parameter* bias_r = nullptr;

  static FusionParams create(ParameterStore& store, const std::string& prefix,
                             std::size_t d, double stddev,
                             std::mt19937_64& rng) {
    auto add = [&](const char* n, Shape s) {
      return &store.add_gaussian(prefix + "." + n, s, stddev, rng);
    };
    FusionParams p;
    p.v_j = add("v_j", {d});
    p.w_j = add("W_j", {d, d});
    p.q_r = add("q_r", {d});
    p.w_r = add("W_r", {d, d});
    p.c = add("c", {d});
    p.v_beta = add("v_beta", {d});
    p.w_beta = add("W_beta", {d, d});
    p.u_beta = add("U_beta", {d, d});
    p.v_delta = add("v_delta", {d});
    p.w_delta = add("W_delta", {d, d});
    p.u_delta = add("U_delta", {d, d});
    p.out_j = add("W_J", {d, 2 * d});
    p.bias_j = add("b_J", {d});
    p.out_r = add("W_R", {d, 2 * d});
    p.bias_r = add("b_R", {d});
    return p;
  }
};

struct SoftMap {
  Var vector;                  // [d]
  std::optional<Var> weights;  // [q], absent when q = 0
};

/// Weighted sum of rows 1.. of `states`; zero vector when there are none.
inline SoftMap soft_map(Tape& tape, Var states, Parameter& v, Parameter& w,
                        Parameter& c, bool normalize = false) {
  const Shape& s = states.shape();
  if (s.size() != 2) {
    throw ShapeError("soft_map: states must be [N x d], got " + shape_string(s));
  }
  if (s[0] < 2) return {tape.constant(Tensor({s[1]})), std::nullopt};
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i < s[0]; ++i) idx.push_back(i);
  Var related = ops::gather_rows(states, idx);
  Var alpha = ops::matmul(
      ops::sigmoid(ops::linear(related, tape.param(w), tape.param(c))),
      tape.param(v));
  if (normalize) alpha = ops::softmax(alpha);
  return {ops::matmul(alpha, related), alpha};
}

struct Attended {
  Var vector;   // [d]
  Var weights;  // [N]
};

/// Attention over all rows of `states` (node 0 included) steered by `query`.
inline Attended experience_attend(Tape& tape, Var states, Var query,
                                  Parameter& v, Parameter& w, Parameter& u) {
  Var scores = ops::matmul(
      ops::tanh(ops::add_bias(ops::linear(states, tape.param(u)),
                              ops::linear(query, tape.param(w)))),
      tape.param(v));
  Var weights = ops::softmax(scores);
  return {ops::matmul(weights, states), weights};
}

struct GlobalRepresentation {
  Var job;     // H^J_global [d]
  Var resume;  // H^R_global [d]
  Var mapped_resume_side;  // V_R, built from the job graph
  Var mapped_job_side;     // V_J, built from the resume graph
  std::optional<Var> alpha;
  std::optional<Var> gamma;
  Var beta;
  Var delta;
};

/// job_states [(1+q_J) x d] and resume_states [(1+q_R) x d] after
/// propagation; row 0 is the current job / resume.
inline GlobalRepresentation global_relations(Tape& tape, Var job_states,
                                             Var resume_states,
                                             const FusionParams& p,
                                             bool normalize_alpha = false) {
  SoftMap vr = soft_map(tape, job_states, *p.v_j, *p.w_j, *p.c, normalize_alpha);
  SoftMap vj =
      soft_map(tape, resume_states, *p.q_r, *p.w_r, *p.c, normalize_alpha);
  Attended ej = experience_attend(tape, job_states, vj.vector, *p.v_beta,
                                  *p.w_beta, *p.u_beta);
  Attended er = experience_attend(tape, resume_states, vr.vector, *p.v_delta,
                                  *p.w_delta, *p.u_delta);
  Var hj = ops::tanh(ops::linear(ops::concat({ops::row(job_states, 0), ej.vector}),
                                 tape.param(*p.out_j), tape.param(*p.bias_j)));
  Var hr = ops::tanh(
      ops::linear(ops::concat({ops::row(resume_states, 0), er.vector}),
                  tape.param(*p.out_r), tape.param(*p.bias_r)));
  return {hj, hr, vr.vector, vj.vector, vr.weights, vj.weights, ej.weights,
          er.weights};
}

}  // namespace pjfcann
