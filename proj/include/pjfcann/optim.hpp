// Adam with L2 weight decay folded into the gradient.
#pragma once

#include <cmath>

#include "json.hpp"
#include "pjfcann/parameter.hpp"

namespace pjfcann {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 1e-5;
};

/// One update of a single parameter from its accumulated grad.
inline void adam_update(Parameter& p, const AdamConfig& cfg) {
  if (p.first_moment.empty()) p.first_moment = Tensor(p.value.shape);
  if (p.second_moment.empty()) p.second_moment = Tensor(p.value.shape);
  ++p.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i] + cfg.l2 * p.value[i];
    double& m = p.first_moment[i];
    double& v = p.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    p.value[i] -= cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
  }
}

inline void adam_step(ParameterStore& store, const AdamConfig& cfg) {
  for (std::size_t i = 0; i < store.size(); ++i) adam_update(store[i], cfg);
}

}  // namespace pjfcann
