// Gated graph propagation over a recruitment graph.
//
// Node states are rows of G [N x d]. One step:
//   a = A (G Hᵀ) + b
//   z = σ(a W_zᵀ + G M_zᵀ),  r = σ(a W_rᵀ + G M_rᵀ)
//   c = tanh(a W_hᵀ + (r ⊙ G) M_hᵀ)
//   G' = (1 - z) ⊙ G + z ⊙ c
#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pjfcann/ops.hpp"
#include "pjfcann/parameter.hpp"

namespace pjfcann {

struct GgnnLayerParams {
  Parameter* h = nullptr;
  Parameter* b = nullptr;
  Parameter* w_z = nullptr;
  Parameter* m_z = nullptr;
  Parameter* w_r = nullptr;
  Parameter* m_r = nullptr;
  Parameter* w_h = nullptr;
  Parameter* m_h = nullptr;

  static GgnnLayerParams create(ParameterStore& store, const std::string& prefix,
                                std::size_t d, double stddev,
                                std::mt19937_64& rng) {
    auto mat = [&](const char* n) {
      return &store.add_gaussian(prefix + "." + n, {d, d}, stddev, rng);
    };
    GgnnLayerParams p;
    p.h = mat("H");
    p.b = &store.add_gaussian(prefix + ".b", {d}, stddev, rng);
    p.w_z = mat("W_z");
    p.m_z = mat("M_z");
    p.w_r = mat("W_r");
    p.m_r = mat("M_r");
    p.w_h = mat("W_h");
    p.m_h = mat("M_h");
    return p;
  }
};

struct GgnnParams {
  std::vector<GgnnLayerParams> layers;

  static GgnnParams create(ParameterStore& store, const std::string& prefix,
                           std::size_t d, std::size_t steps, double stddev,
                           std::mt19937_64& rng) {
    GgnnParams p;
    for (std::size_t t = 0; t < steps; ++t)
      p.layers.push_back(GgnnLayerParams::create(
          store, prefix + ".step" + std::to_string(t), d, stddev, rng));
    return p;
  }
};

struct GgnnHooks {
  bool close_update_gate = false;  // forces z = 0, so states pass through
};

inline Var ggnn_step(Tape& tape, Var states, Var adjacency,
                     const GgnnLayerParams& p, const GgnnHooks& hooks = {}) {
  const Shape& s = states.shape();
  const Shape& a = adjacency.shape();
  if (s.size() != 2 || a.size() != 2 || a[0] != s[0] || a[1] != s[0]) {
    throw ShapeError("ggnn: adjacency " + shape_string(a) +
                     " does not match states " + shape_string(s));
  }
  Var agg = ops::add_bias(
      ops::matmul(adjacency, ops::linear(states, tape.param(*p.h))),
      tape.param(*p.b));
  Var z = hooks.close_update_gate
              ? tape.constant(Tensor(s))
              : ops::sigmoid(ops::add(ops::linear(agg, tape.param(*p.w_z)),
                                      ops::linear(states, tape.param(*p.m_z))));
  Var r = ops::sigmoid(ops::add(ops::linear(agg, tape.param(*p.w_r)),
                                ops::linear(states, tape.param(*p.m_r))));
  Var cand = ops::tanh(
      ops::add(ops::linear(agg, tape.param(*p.w_h)),
               ops::linear(ops::mul(r, states), tape.param(*p.m_h))));
  return ops::gated_blend(z, states, cand);
}

inline Var run_ggnn(Tape& tape, Var states, Var adjacency, const GgnnParams& p,
                    const GgnnHooks& hooks = {}) {
  for (const auto& layer : p.layers)
    states = ggnn_step(tape, states, adjacency, layer, hooks);
  return states;
}

/// Trainable per-entity initial node states. The extra last row is shared by
/// ids that were not seen when the table was built.
class EntityTable {
 public:
  EntityTable() = default;
  EntityTable(ParameterStore& store, const std::string& name,
              const std::vector<std::string>& ids, std::size_t d,
              double stddev, std::mt19937_64& rng) {
    for (const auto& id : ids) {
      if (!rows_.emplace(id, rows_.size()).second) {
        throw std::invalid_argument("entity table: duplicate id " + id);
      }
    }
    table_ = &store.add_gaussian(name, {ids.size() + 1, d}, stddev, rng);
  }

  std::size_t cold_row() const { return rows_.size(); }
  bool contains(const std::string& id) const { return rows_.count(id) > 0; }
  std::size_t row(const std::string& id) const {
    auto it = rows_.find(id);
    return it == rows_.end() ? cold_row() : it->second;
  }
  std::size_t row_strict(const std::string& id) const {
    auto it = rows_.find(id);
    if (it == rows_.end()) throw std::out_of_range("unknown entity id " + id);
    return it->second;
  }
  Parameter& parameter() const { return *table_; }

  Var lookup(Tape& tape, const std::vector<std::string>& ids) const {
    std::vector<std::size_t> idx;
    for (const auto& id : ids) idx.push_back(row(id));
    return ops::gather_rows(tape.param(*table_), idx);
  }

 private:
  std::unordered_map<std::string, std::size_t> rows_;
  Parameter* table_ = nullptr;
};

}  // namespace pjfcann
