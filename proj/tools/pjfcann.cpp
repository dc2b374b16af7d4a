// Command-line driver: train, eval, sweep, gradcheck, synth.
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pjfcann/checkpoint.hpp"
#include "pjfcann/experiment.hpp"
#include "pjfcann/gradcheck_suite.hpp"

#ifndef PJFCANN_GIT_DESCRIBE
#define PJFCANN_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pjfcann;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string corpus;
  bool synth = false;
  std::string synth_config;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "runs";
  std::string sim;
  std::string ablate;
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
  std::optional<double> global_dim_ratio;
  std::optional<double> ph_ratio;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::size_t history_pieces_for(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw UsageError("--ph-ratio must lie in [0, 1]");
  }
  const auto pieces = static_cast<std::size_t>(std::llround(ratio * 9.0));
  if (pieces > 8) throw UsageError("--ph-ratio leaves no training piece");
  return pieces;
}

RunConfig resolve_config(const CommonFlags& f) {
  json j = toy_config();
  if (!f.config.empty()) j.merge_patch(read_json_file(f.config));
  RunConfig c;
  try {
    c = j.get<RunConfig>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.sim.empty()) {
    try {
      parse_similarity(f.sim);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    c.similarity = f.sim;
  }
  if (f.lr) c.train.learning_rate = *f.lr;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.global_dim_ratio) c.model.global_dim_ratio = *f.global_dim_ratio;
  if (f.ph_ratio) c.split.history_pieces = history_pieces_for(*f.ph_ratio);
  if (!f.ablate.empty()) {
    if (f.ablate != "no-gnn") throw UsageError("unknown ablation: " + f.ablate);
    c.model.global_dim_ratio = 0.0;
  }
  try {
    c.model.validate();
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

SynthConfig resolve_synth(const CommonFlags& f) {
  SynthConfig s;
  if (!f.synth_config.empty()) {
    try {
      s = read_json_file(f.synth_config).get<SynthConfig>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("bad synth config: ") + e.what());
    }
  }
  if (f.seed) s.seed = *f.seed;
  return s;
}

Corpus resolve_corpus(const CommonFlags& f) {
  if (f.synth == !f.corpus.empty()) {
    throw UsageError("give exactly one of --corpus PATH or --synth");
  }
  if (f.synth) return synth_generate(resolve_synth(f)).corpus;
  if (!fs::exists(f.corpus)) throw UsageError("corpus not found: " + f.corpus);
  return load_corpus(f.corpus);
}

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}

/// A fresh directory under `root`; never reuses an existing path.
fs::path fresh_dir(const fs::path& root, const std::string& stem) {
  fs::create_directories(root);
  const std::string base = utc_stamp() + "-" + stem;
  for (int k = 0;; ++k) {
    fs::path p = root / (k == 0 ? base : base + "-" + std::to_string(k));
    if (fs::create_directory(p)) return p;
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

json similarity_report_json(const std::optional<SimilarityTrainingReport>& r) {
  if (!r) return nullptr;
  return {{"train_pairs", r->train_pairs},
          {"valid_pairs", r->valid_pairs},
          {"train_accuracy", r->train_accuracy},
          {"valid_accuracy", r->valid_accuracy},
          {"epoch_loss", r->epoch_loss}};
}

json run_report(const RunResult& r, const Corpus& corpus) {
  const RunConfig& c = r.prepared->config;
  json epochs = json::array();
  for (const auto& e : r.fit.epochs) {
    json row = {{"epoch", e.epoch}, {"learning_rate", e.learning_rate},
                {"train_loss", e.train_loss}};
    row["valid"] = e.valid ? json(*e.valid) : json(nullptr);
    epochs.push_back(row);
  }
  return {{"label", run_label(c)},
          {"config", c},
          {"config_hash", hex64(config_hash(json(c)))},
          {"corpus_hash", hex64(corpus_hash(corpus))},
          {"seed", c.seed},
          {"git_describe", PJFCANN_GIT_DESCRIBE},
          {"split",
           {{"history_successes", r.prepared->plan.history.size()},
            {"train", r.prepared->train.size()},
            {"valid", r.prepared->valid.size()},
            {"test", r.prepared->test.size()}}},
          {"similarity_training", similarity_report_json(r.prepared->similarity_report)},
          {"epochs", epochs},
          {"best_epoch", r.fit.best_epoch},
          {"test", r.test},
          {"precision_recall_note",
           "precision or recall with a zero denominator is reported as 0"},
          {"wall_clock_seconds", r.seconds}};
}

std::string metrics_csv(const RunResult& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "epoch,learning_rate,train_loss,accuracy,precision,recall,f1\n";
  for (const auto& e : r.fit.epochs) {
    os << e.epoch << ',' << e.learning_rate << ',' << e.train_loss;
    if (e.valid)
      os << ',' << e.valid->accuracy << ',' << e.valid->precision << ','
         << e.valid->recall << ',' << e.valid->f1;
    else
      os << ",,,,";
    os << '\n';
  }
  os << "test,,," << r.test.accuracy << ',' << r.test.precision << ','
     << r.test.recall << ',' << r.test.f1 << '\n';
  return os.str();
}

std::string slug(const std::string& label) {
  return label == "PJFCANN" ? "pjfcann" : "pjfcann-no-gnn";
}

int cmd_train(const CommonFlags& f) {
  const RunConfig config = resolve_config(f);
  const Corpus corpus = resolve_corpus(f);
  std::cerr << run_label(config) << ": training (seed " << config.seed << ")\n";
  RunResult r = run_experiment(corpus, config, [](const EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " lr " << e.learning_rate << " loss "
              << e.train_loss;
    if (e.valid) std::cerr << " valid acc " << e.valid->accuracy << " f1 " << e.valid->f1;
    std::cerr << '\n';
  });
  const fs::path dir =
      fresh_dir(f.out_dir, slug(run_label(config)) + "-seed" + std::to_string(config.seed));
  write_text(dir / "report.json", run_report(r, corpus).dump(2) + "\n");
  write_text(dir / "metrics.csv", metrics_csv(r));
  save_checkpoint(dir / "checkpoint.json", *r.model, config, r.prepared->similarity.get());
  std::cout << "test accuracy " << r.test.accuracy << " precision " << r.test.precision
            << " recall " << r.test.recall << " f1 " << r.test.f1 << '\n'
            << "run directory " << dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint) {
  if (checkpoint.empty()) throw UsageError("eval needs --checkpoint PATH");
  if (!fs::exists(checkpoint)) throw UsageError("checkpoint not found: " + checkpoint);
  LoadedCheckpoint ck = load_checkpoint(checkpoint);
  const Corpus corpus = resolve_corpus(f);
  // The stored config reproduces the split, history and pair inputs.
  auto prepared = prepare_run(corpus, ck.config);
  if (prepared->vocab.hash() != ck.model->vocabulary().hash()) {
    throw std::runtime_error("corpus vocabulary does not match the checkpoint");
  }
  if (ck.similarity) {
    prepared->similarity = std::move(ck.similarity);
    prepared->builder = std::make_unique<PairBuilder>(
        prepared->corpus, prepared->vocab, prepared->history, prepared->similarity.get(),
        ck.config.model);
    prepared->test = prepared->builder->build_all(prepared->plan.test);
  }
  const Metrics m = evaluate(*ck.model, prepared->test, ck.config.train.threshold);
  json report = {{"label", run_label(ck.config)},
                 {"checkpoint", fs::absolute(checkpoint).string()},
                 {"corpus_hash", hex64(corpus_hash(corpus))},
                 {"git_describe", PJFCANN_GIT_DESCRIBE},
                 {"test", m}};
  const fs::path dir = fresh_dir(f.out_dir, "eval");
  write_text(dir / "report.json", report.dump(2) + "\n");
  std::cout << "test accuracy " << m.accuracy << " precision " << m.precision
            << " recall " << m.recall << " f1 " << m.f1 << '\n'
            << "run directory " << dir.string() << '\n';
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> number_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad number in ") + flag + ": " + item);
    }
  }
  return out;
}

int cmd_sweep(const CommonFlags& f, const std::string& ph_grid,
              const std::string& global_grid, const std::string& sim_grid) {
  const RunConfig base = resolve_config(f);
  std::vector<std::optional<double>> phs{std::nullopt}, globals{std::nullopt};
  std::vector<std::optional<std::string>> sims{std::nullopt};
  if (!ph_grid.empty()) {
    phs.clear();
    for (double v : number_list(ph_grid, "--ph-grid")) {
      history_pieces_for(v);
      phs.push_back(v);
    }
  }
  if (!global_grid.empty()) {
    globals.clear();
    for (double v : number_list(global_grid, "--global-grid")) {
      if (!(v >= 0.0 && v <= 1.0)) throw UsageError("--global-grid values must lie in [0, 1]");
      globals.push_back(v);
    }
  }
  if (!sim_grid.empty()) {
    sims.clear();
    const auto names = sim_grid == "all" ? std::vector<std::string>{} : split_list(sim_grid);
    if (sim_grid == "all") {
      for (auto k : all_similarity_kinds()) sims.push_back(similarity_name(k));
    }
    for (const auto& n : names) {
      try {
        parse_similarity(n);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      sims.push_back(n);
    }
  }
  if (ph_grid.empty() && global_grid.empty() && sim_grid.empty()) {
    throw UsageError("sweep needs at least one of --ph-grid, --global-grid, --sim-grid");
  }
  const Corpus corpus = resolve_corpus(f);
  const fs::path dir = fresh_dir(f.out_dir, "sweep");
  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "ph_ratio,history_pieces,global_dim_ratio,similarity,status,accuracy,precision,"
         "recall,f1,seconds,error\n";
  json cells = json::array();
  std::optional<json> best;
  std::size_t failed = 0;
  for (const auto& ph : phs) {
    for (const auto& g : globals) {
      for (const auto& s : sims) {
        RunConfig c = base;
        if (ph) c.split.history_pieces = history_pieces_for(*ph);
        if (g) c.model.global_dim_ratio = *g;
        if (s) c.similarity = *s;
        json cell = {{"ph_ratio", ph ? json(*ph) : json(nullptr)},
                     {"history_pieces", c.split.history_pieces},
                     {"global_dim_ratio", c.model.global_dim_ratio},
                     {"similarity", c.similarity}};
        std::cerr << "cell " << cell.dump() << '\n';
        try {
          RunResult r = run_experiment(corpus, c);
          cell["status"] = "ok";
          cell["test"] = r.test;
          cell["seconds"] = r.seconds;
          if (!best || r.test.accuracy > (*best)["test"]["accuracy"].get<double>())
            best = cell;
        } catch (const std::exception& e) {
          ++failed;
          cell["status"] = "failed";
          cell["error"] = e.what();
        }
        std::string err = cell.value("error", "");
        for (char& ch : err)
          if (ch == ',' || ch == '\n') ch = ' ';
        csv << (ph ? std::to_string(*ph) : "") << ',' << c.split.history_pieces << ','
            << c.model.global_dim_ratio << ',' << c.similarity << ','
            << cell["status"].get<std::string>() << ',';
        if (cell["status"] == "ok") {
          const auto& t = cell["test"];
          csv << t["accuracy"].get<double>() << ',' << t["precision"].get<double>() << ','
              << t["recall"].get<double>() << ',' << t["f1"].get<double>() << ','
              << cell["seconds"].get<double>() << ",\n";
        } else {
          csv << ",,,,," << err << '\n';
        }
        cells.push_back(cell);
      }
    }
  }
  json report = {{"config", base},
                 {"corpus_hash", hex64(corpus_hash(corpus))},
                 {"git_describe", PJFCANN_GIT_DESCRIBE},
                 {"cells", cells},
                 {"failed_cells", failed}};
  if (best) {
    report["best_cell"] = *best;
    // Soft comparison with the reported optimum near x = 0.2, y = 0.6.
    if (!ph_grid.empty() && !global_grid.empty()) {
      const double x = (*best)["global_dim_ratio"].get<double>();
      const double y = (*best)["ph_ratio"].get<double>();
      report["best_cell_near_reference"] = std::abs(x - 0.2) <= 0.2 && std::abs(y - 0.6) <= 0.2;
    }
  }
  write_text(dir / "sweep.json", report.dump(2) + "\n");
  write_text(dir / "grid.csv", csv.str());
  std::cout << "cells " << cells.size() << " failed " << failed << '\n'
            << "run directory " << dir.string() << '\n';
  return kExitOk;
}

int cmd_gradcheck(const std::string& corrupt, double tolerance, std::uint64_t seed) {
  std::optional<testing::ScopedCorruption> guard;
  if (!corrupt.empty()) {
    bool found = false;
    for (OpKind k : differentiable_ops()) {
      if (corrupt == op_name(k)) {
        guard.emplace(k);
        found = true;
      }
    }
    if (!found) throw UsageError("unknown op for --corrupt: " + corrupt);
  }
  const auto start = std::chrono::steady_clock::now();
  auto outcomes = run_gradcheck_suite(gradcheck_cases(seed));
  std::size_t failures = 0;
  for (const auto& o : outcomes) {
    const bool ok = o.report.passed(tolerance);
    if (!ok) ++failures;
    std::cout << (ok ? "PASS " : "FAIL ") << std::left << std::setw(40) << o.name
              << o.report.summary() << '\n';
    if (!ok) {
      for (const auto& e : o.report.entries)
        if (e.max_relative_error >= tolerance)
          std::cout << "    " << e.parameter << "[" << e.worst_index
                    << "] relative error " << e.max_relative_error << " (analytic "
                    << e.analytic << ", numeric " << e.numeric << ")\n";
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << outcomes.size() - failures << "/" << outcomes.size() << " cases pass at "
            << tolerance << " in " << std::fixed << std::setprecision(1) << secs << "s\n";
  return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_synth(const CommonFlags& f, const std::string& out) {
  if (out.empty()) throw UsageError("synth needs --out PATH");
  const SynthConfig s = resolve_synth(f);
  SynthCorpus syn;
  try {
    syn = synth_generate(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  save_corpus(syn.corpus, out);
  std::cout << "wrote " << syn.corpus.jobs.size() << " jobs, " << syn.corpus.resumes.size()
            << " resumes, " << syn.corpus.applications.size() << " applications to "
            << out << '\n';
  return kExitOk;
}

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--corpus", f.corpus, "line-delimited JSON corpus");
  app->add_flag("--synth", f.synth, "use a generated synthetic corpus");
  app->add_option("--synth-config", f.synth_config, "JSON synthetic-corpus settings");
  app->add_option("--config", f.config, "JSON run config merged over the defaults");
  app->add_option("--seed", f.seed, "seed for split, initialisation and training");
  app->add_option("--out-dir", f.out_dir, "directory receiving run directories");
  app->add_option("--sim", f.sim,
                  "similarity: encoder-cosine|mean|tfidf|sif|wmd|supervised");
  app->add_option("--ablate", f.ablate, "ablation: no-gnn");
  app->add_option("--lr", f.lr, "learning rate");
  app->add_option("--epochs", f.epochs, "training epochs");
  app->add_option("--global-dim-ratio", f.global_dim_ratio,
                  "share of the pair representation given to the global path");
  app->add_option("--ph-ratio", f.ph_ratio,
                  "share of the nine non-test pieces used as history");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Person-job fit matcher with history graphs"};
  app.require_subcommand(1);
  CommonFlags f;
  auto* train = app.add_subcommand("train", "split, train, evaluate, write a run directory");
  add_common(train, f);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on its test split");
  add_common(eval, f);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint written by train");
  auto* sweep = app.add_subcommand("sweep", "grid of full runs");
  add_common(sweep, f);
  std::string ph_grid, global_grid, sim_grid;
  sweep->add_option("--ph-grid", ph_grid, "comma-separated history ratios");
  sweep->add_option("--global-grid", global_grid, "comma-separated global ratios");
  sweep->add_option("--sim-grid", sim_grid, "comma-separated similarity kinds or 'all'");
  auto* grad = app.add_subcommand("gradcheck", "finite-difference checks of every module");
  std::string corrupt;
  double tolerance = 1e-4;
  std::uint64_t grad_seed = 17;
  grad->add_option("--corrupt", corrupt, "scale one op's backward (negative control)");
  grad->add_option("--tolerance", tolerance, "maximum relative error");
  grad->add_option("--seed", grad_seed, "seed for random inputs");
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  std::string out;
  synth->add_option("--synth-config", f.synth_config, "JSON synthetic-corpus settings");
  synth->add_option("--seed", f.seed, "generator seed");
  synth->add_option("--out", out, "output corpus path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  try {
    if (*train) return cmd_train(f);
    if (*eval) return cmd_eval(f, checkpoint);
    if (*sweep) return cmd_sweep(f, ph_grid, global_grid, sim_grid);
    if (*grad) return cmd_gradcheck(corrupt, tolerance, grad_seed);
    if (*synth) return cmd_synth(f, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
