// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every operation in creation order, so the record list is
// already topologically sorted. backward() walks it once in reverse and sums
// incoming gradients in that fixed order, which makes repeated runs bitwise
// reproducible.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pjfcann/parameter.hpp"
#include "pjfcann/tensor.hpp"

namespace pjfcann {

enum class OpKind {
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddBias,
  kTanh,
  kSigmoid,
  kSoftmax,
  kConcat,
  kSlice,
  kSum,
  kMean,
  kSumRows,
  kTranspose,
  kGatherRows,
  kDropout,
  kRow,
  kStack,
  kReshape,
  kGatedBlend,
  kClamp,
  kBce,
  kCosine,
};

inline const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kDropout: return "dropout";
    case OpKind::kRow: return "row";
    case OpKind::kStack: return "stack";
    case OpKind::kReshape: return "reshape";
    case OpKind::kGatedBlend: return "gated_blend";
    case OpKind::kClamp: return "clamp";
    case OpKind::kBce: return "bce";
    case OpKind::kCosine: return "cosine";
  }
  return "unknown";
}

inline const std::vector<OpKind>& differentiable_ops() {
  static const std::vector<OpKind> ops = {
      OpKind::kMatMul,    OpKind::kAdd,       OpKind::kSub,
      OpKind::kMul,       OpKind::kScale,     OpKind::kAddBias,
      OpKind::kTanh,      OpKind::kSigmoid,   OpKind::kSoftmax,
      OpKind::kConcat,    OpKind::kSlice,     OpKind::kSum,
      OpKind::kMean,      OpKind::kSumRows,   OpKind::kTranspose,
      OpKind::kGatherRows, OpKind::kRow,      OpKind::kStack,
      OpKind::kReshape,   OpKind::kGatedBlend, OpKind::kClamp,
      OpKind::kBce,       OpKind::kCosine};
  return ops;
}

namespace testing {
/// Test hook: when set to an op kind, that op's backward receives a scaled
/// upstream gradient, so gradient checks must fail and name it.
inline std::atomic<int>& corrupted_op() {
  static std::atomic<int> op{-1};
  return op;
}
struct ScopedCorruption {
  explicit ScopedCorruption(OpKind kind) {
    corrupted_op() = static_cast<int>(kind);
  }
  ~ScopedCorruption() { corrupted_op() = -1; }
  ScopedCorruption(const ScopedCorruption&) = delete;
  ScopedCorruption& operator=(const ScopedCorruption&) = delete;
};
}  // namespace testing

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
};

using Gradients = std::map<std::string, Tensor>;

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) {
    Node n;
    n.kind = OpKind::kConstant;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  /// Leaf for a parameter. Registered once per tape; later calls return the
  /// same node so all uses accumulate into one gradient.
  Var param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {this, it->second};
    Node n;
    n.kind = OpKind::kParameter;
    n.ref = &p.value;
    n.param = &p;
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    param_nodes_[&p] = nodes_.size() - 1;
    return {this, nodes_.size() - 1};
  }

  Var record(OpKind kind, Tensor value, std::vector<std::size_t> inputs,
             BackwardFn fn) {
    Node n;
    n.kind = kind;
    n.value = std::move(value);
    for (std::size_t in : inputs) {
      if (nodes_[in].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(fn);
    n.inputs = std::move(inputs);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.value;
  }
  OpKind kind(std::size_t id) const { return nodes_[id].kind; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer of a node, zero-allocated on first touch.
  Tensor& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(value(id).shape);
    return n.grad;
  }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  void mark_stochastic() { stochastic_ = true; }
  bool stochastic() const { return stochastic_; }

  /// Reverse pass from a scalar loss. Parameter gradients are added to each
  /// Parameter::grad and also returned keyed by parameter name.
  Gradients backward(Var loss) {
    if (loss.tape != this) {
      throw std::invalid_argument("backward: loss belongs to another tape");
    }
    if (value(loss.id).size() != 1) {
      throw ShapeError("backward: loss must be a scalar, got " +
                       shape_string(value(loss.id).shape));
    }
    grad(loss.id).data[0] += 1.0;
    const int corrupted = testing::corrupted_op();
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      if (corrupted == static_cast<int>(n.kind)) {
        for (double& g : n.grad.data) g *= 1.5;
      }
      n.backward(*this, i);
    }
    Gradients out;
    for (auto& n : nodes_) {
      if (!n.param) continue;
      Tensor g = n.grad.empty() ? Tensor(n.param->value.shape) : n.grad;
      for (std::size_t k = 0; k < g.size(); ++k) n.param->grad[k] += g[k];
      out.emplace(n.param->name, std::move(g));
    }
    return out;
  }

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    Tensor value;
    const Tensor* ref = nullptr;
    Parameter* param = nullptr;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;  // stable addresses: values are referenced while recording
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool stochastic_ = false;
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace pjfcann
