// Gradient-check cases for every differentiable op kind, every trainable
// module, and the end-to-end loss at toy sizes.
#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pjfcann/coattention.hpp"
#include "pjfcann/corpus.hpp"
#include "pjfcann/encoders.hpp"
#include "pjfcann/experiment.hpp"
#include "pjfcann/fusion.hpp"
#include "pjfcann/ggnn.hpp"
#include "pjfcann/gradcheck.hpp"
#include "pjfcann/model.hpp"
#include "pjfcann/pairs.hpp"

namespace pjfcann {

struct GradCheckCase {
  std::string name;  // "op:<kind>", "module:<name>" or "end-to-end..."
  std::function<GradCheckReport()> run;
};

struct GradCheckOutcome {
  std::string name;
  GradCheckReport report;
  double seconds = 0.0;
};

namespace detail {

struct CaseState {
  ParameterStore store;
  std::mt19937_64 rng;
  explicit CaseState(std::uint64_t seed) : rng(seed) {}

  Parameter& uniform(const std::string& name, Shape shape, double lo = -2.0,
                     double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (double& x : t.data) x = u(rng);
    return store.add(name, std::move(t));
  }
  Tensor weights(const Shape& shape) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor t(shape);
    for (double& x : t.data) x = u(rng);
    return t;
  }
};

// Random linear functional of `out`, so every output element matters.
inline Var project_scalar(Tape& tape, Var out, const Tensor& w) {
  if (out.value().size() == 1 && out.value().rank() == 0) return out;
  return ops::sum(ops::mul(out, tape.constant(w)));
}

inline GradCheckCase op_case(OpKind kind, std::uint64_t seed) {
  auto st = std::make_shared<CaseState>(seed);
  using Build = std::function<Var(Tape&)>;
  Build build;
  auto p = [st](const std::string& n, Shape s) { return &st->uniform(n, std::move(s)); };
  switch (kind) {
    case OpKind::kMatMul: {
      auto a = p("A", {3, 4}), b = p("B", {4, 2}), v = p("v", {4}), u = p("u", {3});
      build = [=](Tape& t) {
        return ops::concat({ops::reshape(ops::matmul(t.param(*a), t.param(*b)), {6}),
                            ops::matmul(t.param(*a), t.param(*v)),
                            ops::reshape(ops::matmul(t.param(*u), t.param(*a)), {4})});
      };
      break;
    }
    case OpKind::kAdd: case OpKind::kSub: case OpKind::kMul: {
      auto a = p("a", {3, 4}), b = p("b", {3, 4});
      build = [=](Tape& t) {
        if (kind == OpKind::kAdd) return ops::add(t.param(*a), t.param(*b));
        if (kind == OpKind::kSub) return ops::sub(t.param(*a), t.param(*b));
        return ops::mul(t.param(*a), t.param(*b));
      };
      break;
    }
    case OpKind::kScale: {
      auto a = p("a", {3, 4});
      build = [=](Tape& t) { return ops::scale(t.param(*a), -1.7); };
      break;
    }
    case OpKind::kAddBias: {
      auto x = p("x", {3, 4}), b = p("b", {4});
      build = [=](Tape& t) { return ops::add_bias(t.param(*x), t.param(*b)); };
      break;
    }
    case OpKind::kTanh: case OpKind::kSigmoid: {
      auto x = p("x", {3, 4});
      build = [=](Tape& t) {
        return kind == OpKind::kTanh ? ops::tanh(t.param(*x)) : ops::sigmoid(t.param(*x));
      };
      break;
    }
    case OpKind::kSoftmax: {
      auto x = p("x", {3, 4}), v = p("v", {5});
      build = [=](Tape& t) {
        return ops::concat({ops::reshape(ops::softmax(t.param(*x)), {12}),
                            ops::softmax(t.param(*v))});
      };
      break;
    }
    case OpKind::kConcat: {
      auto a = p("a", {3, 2}), b = p("b", {3, 3});
      build = [=](Tape& t) { return ops::concat({t.param(*a), t.param(*b)}); };
      break;
    }
    case OpKind::kSlice: {
      auto x = p("x", {3, 5});
      build = [=](Tape& t) { return ops::slice(t.param(*x), 1, 3); };
      break;
    }
    case OpKind::kSum: case OpKind::kMean: {
      auto x = p("x", {3, 4});
      build = [=](Tape& t) {
        return kind == OpKind::kSum ? ops::sum(t.param(*x)) : ops::mean(t.param(*x));
      };
      break;
    }
    case OpKind::kSumRows: {
      auto x = p("x", {3, 4});
      build = [=](Tape& t) { return ops::sum_rows(t.param(*x)); };
      break;
    }
    case OpKind::kTranspose: {
      auto x = p("x", {3, 4});
      build = [=](Tape& t) { return ops::transpose(t.param(*x)); };
      break;
    }
    case OpKind::kGatherRows: {
      auto x = p("table", {5, 3});
      build = [=](Tape& t) { return ops::gather_rows(t.param(*x), {0, 2, 2, 4}); };
      break;
    }
    case OpKind::kRow: {
      auto x = p("x", {3, 4});
      build = [=](Tape& t) { return ops::row(t.param(*x), 1); };
      break;
    }
    case OpKind::kStack: {
      auto a = p("a", {4}), b = p("b", {4});
      build = [=](Tape& t) { return ops::stack({t.param(*a), t.param(*b), t.param(*a)}); };
      break;
    }
    case OpKind::kReshape: {
      auto x = p("x", {3, 4});
      build = [=](Tape& t) { return ops::reshape(t.param(*x), {2, 6}); };
      break;
    }
    case OpKind::kGatedBlend: {
      auto z = p("z", {3, 4}), a = p("prev", {3, 4}), c = p("cand", {3, 4});
      build = [=](Tape& t) {
        return ops::gated_blend(t.param(*z), t.param(*a), t.param(*c));
      };
      break;
    }
    case OpKind::kClamp: {
      auto x = p("x", {3, 4});
      build = [=](Tape& t) { return ops::clamp(t.param(*x), -1.0, 1.0); };
      break;
    }
    case OpKind::kBce: {
      auto y = &st->uniform("predictions", {4}, 0.1, 0.9);
      build = [=](Tape& t) { return ops::bce(t.param(*y), {1.0, 0.0, 1.0, 0.0}); };
      break;
    }
    case OpKind::kCosine: {
      auto a = p("a", {5}), b = p("b", {5});
      build = [=](Tape& t) { return ops::cosine(t.param(*a), t.param(*b)); };
      break;
    }
    default:
      throw std::invalid_argument(std::string("no gradient case for op ") + op_name(kind));
  }
  // Fix the projection weights from one probe evaluation.
  Tensor w;
  {
    Tape probe;
    w = st->weights(build(probe).shape());
  }
  return {std::string("op:") + op_name(kind), [st, build, w] {
            return grad_check(
                [&](Tape& t) { return project_scalar(t, build(t), w); },
                st->store.all());
          }};
}

inline Var random_input(Tape& tape, CaseState& st, Shape shape) {
  return tape.constant(st.weights(shape));
}

}  // namespace detail

/// Toy corpus whose pairs have two requirements, two experiences and at most
/// two related entities per graph.
inline SynthCorpus toy_gradcheck_corpus(std::uint64_t seed) {
  SynthConfig c;
  c.num_skills = 2;
  c.num_jobs = 6;
  c.num_resumes = 8;
  c.applications_per_resume = 4;
  c.requirements_per_job = 2;
  c.words_per_requirement = 3;
  c.experiences_per_resume = 2;
  c.words_per_experience = 3;
  c.skill_words_per_sentence = 1;
  c.mentions_per_skill = 1;
  c.skill_pool_size = 2;
  c.filler_vocabulary = 6;
  c.noise = 0.0;
  c.seed = seed;
  return synth_generate(c);
}

/// Full-model loss case at toy sizes (d = 6, d2 = 8, m = n = 2, q <= 2).
inline GradCheckCase end_to_end_case(const std::string& name, double global_ratio,
                                     std::uint64_t seed) {
  struct State {
    SynthCorpus synth;
    Vocabulary vocab;
    HistoryIndex history;
    std::unique_ptr<SimilarityFunction> sim;
    std::unique_ptr<PjfModel> model;
    PairInput pair;
  };
  auto st = std::make_shared<State>();
  st->synth = toy_gradcheck_corpus(seed);
  st->vocab = corpus_vocabulary(st->synth.corpus, 1);
  auto pairs = labeled_pairs(st->synth.corpus);
  st->history = HistoryIndex(pairs);
  ModelConfig mc;
  mc.word_dim = 3;
  mc.encoder_hidden = 2;
  mc.d = 6;
  mc.d2 = 8;
  mc.init_stddev = 0.5;
  mc.global_dim_ratio = global_ratio;
  mc.graph.max_related = 2;
  st->sim = std::make_unique<SimilarityFunction>(SimilarityKind::kMean, st->vocab);
  st->model = std::make_unique<PjfModel>(mc, st->vocab, ids_of(st->synth.corpus.jobs),
                                         ids_of(st->synth.corpus.resumes), seed);
  PairBuilder builder(st->synth.corpus, st->vocab, st->history, st->sim.get(), mc);
  // Prefer a pair with related entities on both sides.
  std::size_t best = 0, best_q = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairInput in = builder.build(pairs[i]);
    if (!in.job_graph || !in.resume_graph) break;
    const std::size_t q = std::min(in.job_graph->size(), in.resume_graph->size());
    if (q > best_q) {
      best_q = q;
      best = i;
    }
  }
  st->pair = builder.build(pairs[best]);
  return {name, [st] {
            return grad_check(
                [&](Tape& t) {
                  Var y = st->model->forward(t, st->pair, Mode::kEval).prediction;
                  return ops::bce(y, {static_cast<double>(st->pair.label)});
                },
                st->model->parameters().all());
          }};
}

inline std::vector<GradCheckCase> gradcheck_cases(std::uint64_t seed = 17) {
  std::vector<GradCheckCase> cases;
  for (OpKind k : differentiable_ops())
    cases.push_back(detail::op_case(k, seed + static_cast<std::uint64_t>(k)));

  {  // text encoder: d_w = 4, h = 3, d = 5
    auto st = std::make_shared<detail::CaseState>(seed + 101);
    Parameter& emb = st->uniform("embedding", {7, 4}, -0.5, 0.5);
    auto enc = std::make_shared<DocumentEncoder>(st->store, "encoder", emb,
                                                 DocumentEncoderConfig{4, 3, 5}, 0.5,
                                                 st->rng);
    Tensor w = st->weights({5});
    cases.push_back({"module:text-encoders", [st, enc, w] {
                       return grad_check(
                           [&](Tape& t) {
                             return detail::project_scalar(
                                 t, enc->encode(t, {{2, 3, 4}, {5, 6}, {2}}), w);
                           },
                           st->store.all());
                     }});
  }
  {  // co-attention: m = 2, n = 3, d = 4
    auto st = std::make_shared<detail::CaseState>(seed + 102);
    auto p = CoAttentionParams::create(st->store, "coattention", 4, 0.5, st->rng);
    Parameter& req = st->uniform("requirements", {2, 4});
    Parameter& exp = st->uniform("experiences", {3, 4});
    Tensor w = st->weights({8});
    cases.push_back({"module:co-attention", [st, p, &req, &exp, w] {
                       return grad_check(
                           [&](Tape& t) {
                             auto l = local_match(t, t.param(req), t.param(exp), p);
                             return detail::project_scalar(t, ops::concat({l.job, l.resume}), w);
                           },
                           st->store.all());
                     }});
  }
  {  // gated GNN with table lookup: d = 3, q = 2
    auto st = std::make_shared<detail::CaseState>(seed + 103);
    EntityTable table(st->store, "graph.jobs", {"a", "b", "c", "d"}, 3, 0.5, st->rng);
    auto p = GgnnParams::create(st->store, "ggnn", 3, 2, 0.5, st->rng);
    Tensor adj = st->weights({3, 3});
    Tensor w = st->weights({3, 3});
    cases.push_back({"module:gated-gnn", [st, table, p, adj, w] {
                       return grad_check(
                           [&](Tape& t) {
                             Var g0 = table.lookup(t, {"c", "a", "zzz"});
                             return detail::project_scalar(
                                 t, run_ggnn(t, g0, t.constant(adj), p), w);
                           },
                           st->store.all());
                     }});
  }
  {  // experience fusion: d = 3, q = 2
    auto st = std::make_shared<detail::CaseState>(seed + 104);
    auto p = FusionParams::create(st->store, "fusion", 3, 0.5, st->rng);
    Parameter& gj = st->uniform("job_states", {3, 3});
    Parameter& gr = st->uniform("resume_states", {2, 3});
    Tensor w = st->weights({6});
    for (bool normalize : {false, true}) {
      cases.push_back({normalize ? "module:experience-fusion(normalized)"
                                 : "module:experience-fusion",
                       [st, p, &gj, &gr, w, normalize] {
                         return grad_check(
                             [&](Tape& t) {
                               auto g = global_relations(t, t.param(gj), t.param(gr), p,
                                                         normalize);
                               return detail::project_scalar(
                                   t, ops::concat({g.job, g.resume}), w);
                             },
                             st->store.all());
                       }});
    }
  }
  {  // prediction head
    auto st = std::make_shared<detail::CaseState>(seed + 105);
    auto p = PredictionParams::create(st->store, "predict", 4, 5, 0.5, st->rng);
    Parameter& hj = st->uniform("job", {4});
    Parameter& hr = st->uniform("resume", {4});
    cases.push_back({"module:prediction", [st, p, &hj, &hr] {
                       return grad_check(
                           [&](Tape& t) {
                             return ops::bce(predict(t, t.param(hj), t.param(hr), p), {1.0});
                           },
                           st->store.all());
                     }});
  }
  {  // twin sequence encoder behind the learned similarity
    auto st = std::make_shared<detail::CaseState>(seed + 106);
    Parameter& emb = st->uniform("embedding", {6, 3}, -0.5, 0.5);
    auto enc = std::make_shared<AttentiveSequenceEncoder>(st->store, "sim", emb, 2, 0.5,
                                                          st->rng);
    cases.push_back({"module:similarity-encoder", [st, enc] {
                       return grad_check(
                           [&](Tape& t) {
                             return ops::cosine(enc->encode(t, {2, 3, 4}),
                                                enc->encode(t, {5, 2}));
                           },
                           st->store.all());
                     }});
  }
  cases.push_back(end_to_end_case("end-to-end", 0.5, seed + 107));
  cases.push_back(end_to_end_case("end-to-end(projected)", 0.3, seed + 108));
  cases.push_back(end_to_end_case("end-to-end(w/o GNN)", 0.0, seed + 109));
  return cases;
}

inline std::vector<GradCheckOutcome> run_gradcheck_suite(
    const std::vector<GradCheckCase>& cases) {
  std::vector<GradCheckOutcome> out;
  for (const auto& c : cases) {
    const auto start = std::chrono::steady_clock::now();
    GradCheckOutcome o{c.name, c.run(), 0.0};
    o.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace pjfcann
