// Central finite-difference gradient checking.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pjfcann/autodiff.hpp"

namespace pjfcann {

struct GradCheckEntry {
  std::string parameter;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  bool refused = false;
  std::string message;
  std::vector<GradCheckEntry> entries;

  double max_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_relative_error);
    return m;
  }
  bool passed(double tolerance) const {
    return !refused && max_error() < tolerance;
  }
  const GradCheckEntry* worst() const {
    const GradCheckEntry* w = nullptr;
    for (const auto& e : entries)
      if (!w || e.max_relative_error > w->max_relative_error) w = &e;
    return w;
  }
  std::string summary() const {
    if (refused) return "refused: " + message;
    std::ostringstream os;
    os << "max relative error " << max_error();
    if (const auto* w = worst()) {
      os << " (" << w->parameter << "[" << w->worst_index
         << "]: analytic " << w->analytic << ", numeric " << w->numeric << ")";
    }
    return os.str();
  }
};

/// Builds a scalar on a fresh tape from the current parameter values.
using Fragment = std::function<Var(Tape&)>;

/// Compares backward() against central differences for every element of
/// every listed parameter. Relative error is
/// |analytic - numeric| / max(1, |numeric|). Fragments that use dropout are
/// refused since their output is not a deterministic function of the
/// parameters.
inline GradCheckReport grad_check(const Fragment& fragment,
                                  const std::vector<Parameter*>& params,
                                  double step = 1e-5) {
  GradCheckReport report;
  std::vector<Tensor> saved_grads;
  for (Parameter* p : params) {
    saved_grads.push_back(p->grad);
    p->zero_grad();
  }
  Gradients analytic;
  {
    Tape tape;
    Var loss = fragment(tape);
    if (tape.stochastic()) {
      report.refused = true;
      report.message =
          "fragment applies dropout; a stochastic op cannot be gradient "
          "checked (evaluate with dropout disabled)";
    } else {
      if (loss.value().size() != 1) {
        throw ShapeError("grad_check: fragment must return a scalar, got " +
                         shape_string(loss.shape()));
      }
      tape.backward(loss);
    }
  }
  if (!report.refused) {
    auto eval = [&] {
      Tape tape;
      return fragment(tape).value().item();
    };
    for (Parameter* p : params) {
      GradCheckEntry entry;
      entry.parameter = p->name;
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double original = p->value[i];
        p->value[i] = original + step;
        const double up = eval();
        p->value[i] = original - step;
        const double down = eval();
        p->value[i] = original;
        const double numeric = (up - down) / (2.0 * step);
        const double a = p->grad[i];
        const double err =
            std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
        if (err > entry.max_relative_error || i == 0) {
          entry.max_relative_error = std::max(err, entry.max_relative_error);
          entry.worst_index = i;
          entry.analytic = a;
          entry.numeric = numeric;
        }
      }
      report.entries.push_back(entry);
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    params[k]->grad = saved_grads[k];
  }
  return report;
}

}  // namespace pjfcann
