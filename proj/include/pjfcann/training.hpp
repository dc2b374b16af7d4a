// Metrics, the training loop, and its learning-rate schedule.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjfcann/model.hpp"
#include "pjfcann/optim.hpp"

namespace pjfcann {

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;

  std::size_t total() const { return tp + fp + tn + fn; }
};

inline void to_json(nlohmann::json& j, const Metrics& m) {
  j = {{"accuracy", m.accuracy}, {"precision", m.precision},
       {"recall", m.recall},     {"f1", m.f1},
       {"tp", m.tp},             {"fp", m.fp},
       {"tn", m.tn},             {"fn", m.fn},
       {"precision_defined", m.precision_defined},
       {"recall_defined", m.recall_defined}};
}

/// Precision/recall with a zero denominator are reported as 0 and flagged.
inline Metrics compute_metrics(const std::vector<double>& scores,
                               const std::vector<int>& labels,
                               double threshold = 0.5) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metrics: score/label count mismatch");
  }
  if (scores.empty()) throw std::invalid_argument("metrics: empty pair set");
  Metrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++m.tp;
    else if (pred) ++m.fp;
    else if (truth) ++m.fn;
    else ++m.tn;
  }
  const auto div = [](std::size_t a, std::size_t b) {
    return static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = div(m.tp + m.tn, m.total());
  m.precision_defined = m.tp + m.fp > 0;
  m.recall_defined = m.tp + m.fn > 0;
  m.precision = m.precision_defined ? div(m.tp, m.tp + m.fp) : 0.0;
  m.recall = m.recall_defined ? div(m.tp, m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

enum class DecayMode { kMultiply, kSubtract };

struct TrainConfig {
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double lr_decay = 0.1;
  std::size_t decay_every = 2;
  std::string decay_mode = "multiply";  // or "subtract"
  double l2 = 1e-5;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double threshold = 0.5;

  void validate() const {
    if (batch_size == 0 || decay_every == 0) {
      throw std::invalid_argument("train config: batch_size and decay_every must be positive");
    }
    if (!(learning_rate > 0.0) || l2 < 0.0) {
      throw std::invalid_argument("train config: learning rate must be positive");
    }
    if (decay_mode != "multiply" && decay_mode != "subtract") {
      throw std::invalid_argument("train config: decay_mode must be multiply or subtract");
    }
  }

  NLOHMANN_DEFINE_TYPE_INTRUSIVE_WITH_DEFAULT(TrainConfig, batch_size,
                                              learning_rate, lr_decay,
                                              decay_every, decay_mode, l2,
                                              epochs, seed, threshold)
};

/// Rate for a 0-based epoch. Subtractive decay stops at zero.
inline double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  const auto steps = static_cast<double>(epoch / cfg.decay_every);
  if (cfg.decay_mode == "subtract")
    return std::max(0.0, cfg.learning_rate - cfg.lr_decay * steps);
  return cfg.learning_rate * std::pow(cfg.lr_decay, steps);
}

inline std::vector<double> predict_all(const PjfModel& model,
                                       const std::vector<PairInput>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(model.score(p));
  return out;
}

inline std::vector<int> labels_of(const std::vector<PairInput>& pairs) {
  std::vector<int> out;
  for (const auto& p : pairs) out.push_back(p.label);
  return out;
}

inline Metrics evaluate(const PjfModel& model, const std::vector<PairInput>& pairs,
                        double threshold = 0.5) {
  return compute_metrics(predict_all(model, pairs), labels_of(pairs), threshold);
}

/// Mean eval-mode BCE over `pairs`.
inline double mean_loss(const PjfModel& model, const std::vector<PairInput>& pairs) {
  double total = 0.0;
  for (const auto& p : pairs) {
    Tape tape;
    Var y = model.forward(tape, p, Mode::kEval).prediction;
    total += ops::bce(y, {static_cast<double>(p.label)}).value().item();
  }
  return total / static_cast<double>(pairs.size());
}

/// Accumulates mean-BCE gradients of `pairs` into the parameters' grads and
/// returns the mean loss. Dropout masks come from `rng` in train mode.
inline double accumulate_gradients(PjfModel& model,
                                   const std::vector<const PairInput*>& pairs,
                                   Mode mode, std::mt19937_64& rng) {
  double total = 0.0;
  const double w = 1.0 / static_cast<double>(pairs.size());
  for (const PairInput* p : pairs) {
    Tape tape;
    Var y = model.forward(tape, *p, mode, &rng).prediction;
    Var loss = ops::bce(y, {static_cast<double>(p->label)});
    const double value = loss.value().item();
    if (!std::isfinite(value)) return value;
    total += value;
    tape.backward(ops::scale(loss, w));
  }
  return total * w;
}

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochLog {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  std::optional<Metrics> valid;
};

struct FitResult {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_valid_f1 = -1.0;
};

/// Mini-batch Adam over shuffled training pairs. Parameters at the epoch
/// with the best validation F1 (earliest on ties) are restored at the end;
/// without validation pairs the final parameters are kept. Throws
/// DivergenceError as soon as a loss or parameter turns non-finite.
inline FitResult fit(PjfModel& model, const std::vector<PairInput>& train,
                     const std::vector<PairInput>& valid,
                     const TrainConfig& cfg,
                     const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("fit: no training pairs");
  ParameterStore& store = model.parameters();
  std::mt19937_64 rng(cfg.seed);
  std::vector<const PairInput*> order;
  for (const auto& p : train) order.push_back(&p);
  FitResult result;
  std::map<std::string, Tensor> best;
  AdamConfig adam;
  adam.l2 = cfg.l2;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.learning_rate = learning_rate_at(cfg, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const PairInput*> batch(order.begin() + start, order.begin() + end);
      store.zero_grad();
      const double loss = accumulate_gradients(model, batch, Mode::kTrain, rng);
      if (!std::isfinite(loss)) {
        throw DivergenceError("training diverged: non-finite loss in epoch " +
                              std::to_string(epoch));
      }
      total += loss * static_cast<double>(batch.size());
      adam_step(store, adam);
    }
    for (std::size_t i = 0; i < store.size(); ++i) {
      for (double v : store[i].value.data) {
        if (!std::isfinite(v)) {
          throw DivergenceError("training diverged: parameter " + store[i].name +
                                " is non-finite after epoch " + std::to_string(epoch));
        }
      }
    }
    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = adam.learning_rate;
    log.train_loss = total / static_cast<double>(order.size());
    if (!valid.empty()) {
      log.valid = evaluate(model, valid, cfg.threshold);
      if (log.valid->f1 > result.best_valid_f1) {
        result.best_valid_f1 = log.valid->f1;
        result.best_epoch = epoch;
        best = store.snapshot();
      }
    } else {
      result.best_epoch = epoch;
    }
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  if (!best.empty()) store.restore(best);
  return result;
}

}  // namespace pjfcann
