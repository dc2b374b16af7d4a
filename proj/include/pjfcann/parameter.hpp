// Named trainable arrays and the store that owns them.
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pjfcann/tensor.hpp"

namespace pjfcann {

/// A trainable array. The moment tensors and step counter belong to Adam.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
  long step = 0;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape),
        first_moment(value.shape),
        second_moment(value.shape) {}

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

/// Owns parameters in registration order; names are unique.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(const std::string& name, Tensor value) {
    if (index_.count(name)) {
      throw std::invalid_argument("duplicate parameter name: " + name);
    }
    params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
    index_[name] = params_.size() - 1;
    return *params_.back();
  }

  /// Gaussian(0, stddev) initialised parameter.
  Parameter& add_gaussian(const std::string& name, const Shape& shape,
                          double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor t(shape);
    for (double& x : t.data) x = dist(rng);
    return add(name, std::move(t));
  }

  Parameter& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw std::out_of_range("unknown parameter: " + name);
    }
    return *params_[it->second];
  }
  const Parameter& get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->get(name);
  }
  bool contains(const std::string& name) const { return index_.count(name); }

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  /// Snapshot of values keyed by name.
  std::map<std::string, Tensor> snapshot() const {
    std::map<std::string, Tensor> out;
    for (const auto& p : params_) out.emplace(p->name, p->value);
    return out;
  }
  void restore(const std::map<std::string, Tensor>& values) {
    for (auto& p : params_) {
      auto it = values.find(p->name);
      if (it == values.end()) {
        throw std::out_of_range("snapshot is missing parameter " + p->name);
      }
      if (it->second.shape != p->value.shape) {
        throw ShapeError("snapshot shape mismatch for " + p->name + ": " +
                         shape_string(it->second.shape) + " vs " +
                         shape_string(p->value.shape));
      }
      p->value = it->second;
    }
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace pjfcann
