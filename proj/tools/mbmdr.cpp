// mbmdr: simulate, train, predict, tune and benchmark from the command line.
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage, 3 I/O,
// 4 validation or parse error, 5 infeasible specification.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <tbb/global_control.h>

#include "CLI11.hpp"
#include "mbmdr/mbmdr.hpp"

namespace fs = std::filesystem;
using namespace mbmdr;

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kUsage = 2, kIo = 3, kInvalid = 4, kInfeasible = 5 };

struct Common {
  int threads = 0;
  int verbose = 0;
  std::uint64_t seed = 1;
  std::string pheno_col = "PHENOTYPE";
  std::string id_col = "sample_id";
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::string g17(double v) { return format_g17(v); }

std::string join_features(const MdrModel& m, const std::vector<std::string>& names) {
  std::string s;
  for (auto j : m.tuple) s += (s.empty() ? "" : "+") + names[j];
  return s;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  int scenario = 1;
  std::string maf = "0.4";
  double h2 = 0.2;
  std::size_t n = 2000;
  std::size_t q = 100;
  std::size_t reps = 1;
  std::string out_dir = "sim";
  std::string prefix = "replicate";
};

int run_simulate(const SimulateArgs& a, const Common& c) {
  const auto groups = parse_maf_groups(a.maf);
  const auto components = components_for(a.scenario, groups, a.h2);
  fs::create_directories(a.out_dir);
  for (std::size_t r = 0; r < a.reps; ++r) {
    ScenarioSpec spec;
    spec.scenario = a.scenario;
    spec.components = components;
    spec.q_total = a.q;
    spec.n = a.n;
    spec.seed = derive_seed(c.seed, r);
    const auto model = realize_scenario(spec);
    const auto ds = simulate_dataset(model);
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%03zu", a.prefix.c_str(), r + 1);
    const fs::path csv = fs::path(a.out_dir) / (std::string(stem) + ".csv");
    {
      auto out = open_out(csv);
      write_dataset(out, ds, TableFormat::kCsv, c.pheno_col);
    }
    auto manifest = scenario_manifest(model);
    manifest["replicate"] = r + 1;
    manifest["root_seed"] = c.seed;
    manifest["data_file"] = csv.filename().string();
    auto mout = open_out(fs::path(a.out_dir) / (std::string(stem) + ".json"));
    mout << manifest.dump(2) << '\n';
    spdlog::info("wrote {} (n={}, cases={})", csv.string(), ds.n(), ds.case_count());
  }
  return kOk;
}

// ---- train / tune -------------------------------------------------------------

struct HyperArgs {
  int order = 2;
  bool order_range = false;
  std::string adjustment = "NONE";
  double alpha = 0.1;
  int min_cell_size = 10;
  bool o_as_na = true;
  int s = 1;

  HyperParams to_hyperparams() const {
    HyperParams hp;
    hp.order = order;
    hp.order_range = order_range;
    hp.adjustment = parse_adjustment(adjustment);
    hp.alpha = alpha;
    hp.min_cell_size = min_cell_size;
    hp.o_as_na = o_as_na;
    hp.s = s;
    hp.validate();
    return hp;
  }
};

struct TuneArgs {
  std::size_t budget = 30;
  int folds = 5;
  std::string trace;
};

struct TrainArgs {
  std::string data;
  std::string model_out = "model.json";
  std::string report;
  std::size_t report_top = 20;
  bool tune = false;
  HyperArgs hyper;
  TuneArgs tuning;
};

LoadOptions load_options(const Common& c) {
  LoadOptions o;
  o.pheno_col = c.pheno_col;
  o.id_col = c.id_col;
  return o;
}

TuneResult run_tuning(const GenotypeDataset& ds, const TuneArgs& t, const Common& c) {
  TuneOptions opts;
  opts.threads = c.threads;
  auto result = tune(ds, SearchSpace{}, t.budget, t.folds, c.seed, opts);
  spdlog::info("tuning: best trial {} with CV AUC {:.4f} ({} trials, {:.1f}s)", result.best_index, result.cv_auc,
               result.trials.size(), result.wall_seconds);
  if (!t.trace.empty()) {
    auto out = open_out(t.trace);
    write_tune_trace(out, result);
  }
  return result;
}

void print_hyperparams(std::ostream& os, const HyperParams& hp) {
  os << "order=" << hp.order << " order_range=" << (hp.order_range ? "true" : "false")
     << " adjustment=" << to_string(hp.adjustment) << " alpha=" << g17(hp.alpha)
     << " min_cell_size=" << hp.min_cell_size << " o_as_na=" << (hp.o_as_na ? "true" : "false") << " s=" << hp.s
     << '\n';
}

int run_train(const TrainArgs& a, const Common& c) {
  const auto ds = load_dataset(a.data, load_options(c));
  HyperParams hp = a.tune ? run_tuning(ds, a.tuning, c).best : a.hyper.to_hyperparams();
  auto ranking = enumerate_and_rank(ds, hp, EngineOptions{c.threads});
  const auto total = ranking.models.size();
  if (!a.report.empty()) {
    auto out = open_out(a.report);
    out << "rank,features,statistic,high_cells,low_cells,models_ranked\n";
    const std::vector<std::string> names(ds.feature_names().begin(), ds.feature_names().end());
    for (std::size_t r = 0; r < std::min(a.report_top, total); ++r) {
      const auto& m = ranking.models[r];
      int nh = 0, nl = 0;
      for (auto l : m.labels) {
        nh += l == Label::kH;
        nl += l == Label::kL;
      }
      out << r + 1 << ',' << join_features(m, names) << ',' << g17(m.statistic) << ',' << nh << ',' << nl << ','
          << total << '\n';
    }
  }
  const auto clf = make_classifier(std::move(ranking), ds);
  save_model(a.model_out, clf);
  std::cout << "ranked " << total << " models; kept " << clf.models.size() << "\n";
  print_hyperparams(std::cout, hp);
  return kOk;
}

struct TuneCmdArgs {
  std::string data;
  TuneArgs tuning;
};

int run_tune(const TuneCmdArgs& a, const Common& c) {
  const auto ds = load_dataset(a.data, load_options(c));
  const auto r = run_tuning(ds, a.tuning, c);
  std::cout << "cv_auc=" << g17(r.cv_auc) << " trial=" << r.best_index << '\n';
  print_hyperparams(std::cout, r.best);
  return kOk;
}

// ---- predict ------------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out = "predictions.csv";
  bool auc = false;
};

int run_predict(const PredictArgs& a, const Common& c) {
  const auto clf = load_model(a.model);
  const auto table = load_genotype_table(a.data, load_options(c), a.auc);
  const auto rows = aligned_rows(clf, table);
  auto out = open_out(a.out);
  out << "sample_id,proba,class,score\n";
  std::vector<double> probas;
  probas.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = predict_proba(clf, rows[i]);
    probas.push_back(p);
    out << table.sample_ids[i] << ',' << g17(p) << ',' << predict_class(clf, rows[i]) << ','
        << risk_score(clf, rows[i]) << '\n';
  }
  if (a.auc) std::cout << "auc=" << g17(auc(probas, *table.phenotype)) << '\n';
  return kOk;
}

// ---- benchmark ----------------------------------------------------------------

int run_bench(BenchmarkConfig cfg, const std::string& out_path, const Common& c) {
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  const auto report = run_benchmark(cfg);
  auto out = open_out(out_path);
  write_benchmark_csv(out, report);
  for (const auto& s : report.summaries)
    std::cout << s.algorithm << ": median " << g17(s.median) << " (" << g17(s.q25) << "; " << g17(s.q75)
              << ") over " << s.count << " replicates\n";
  return kOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores; MBMDR_THREADS overrides the default)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", c.seed, "Root random seed");
  sub->add_flag("-v,--verbose", c.verbose, "Increase log verbosity (repeatable)");
  sub->add_option("--pheno-col", c.pheno_col, "Phenotype column name");
  sub->add_option("--id-col", c.id_col, "Sample id column name");
}

void add_hyper(CLI::App* sub, HyperArgs& h) {
  sub->add_option("--order", h.order, "Interaction order (1 or 2)")->check(CLI::Range(1, 2));
  sub->add_option("--order-range", h.order_range, "Scan all orders up to --order (true/false)");
  sub->add_option("--adjustment", h.adjustment, "Cell test adjustment")->check(CLI::IsMember({"NONE", "CODOMINANT"}));
  sub->add_option("--alpha", h.alpha, "Cell significance level");
  sub->add_option("--min-cell-size", h.min_cell_size, "Minimum samples for a labeled cell");
  sub->add_option("--o-as-na", h.o_as_na, "Skip O cells at prediction time (true/false)");
  sub->add_option("--s", h.s, "Number of top models kept");
}

void add_tuning(CLI::App* sub, TuneArgs& t) {
  sub->add_option("--budget", t.budget, "Random-search trials")->check(CLI::PositiveNumber);
  sub->add_option("--folds", t.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  sub->add_option("--trace", t.trace, "CSV trace of every (trial, fold)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based multifactor dimensionality reduction classifier"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  if (const char* env = std::getenv("MBMDR_THREADS")) {
    try {
      common.threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "error: MBMDR_THREADS must be an integer\n";
      return kUsage;
    }
  }

  add_common(&app, common);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate case-control datasets");
  simulate->add_option("--scenario", sim.scenario, "Scenario 1-8, or 0 for one component per MAF group")
      ->check(CLI::Range(0, 8));
  simulate->add_option("--maf", sim.maf, "MAF groups, e.g. \"0.2,0.2;0.1\"");
  simulate->add_option("--h2", sim.h2, "Heritability per component");
  simulate->add_option("--n", sim.n, "Samples per dataset (even)");
  simulate->add_option("--q", sim.q, "Total SNPs");
  simulate->add_option("--reps", sim.reps, "Replicates")->check(CLI::PositiveNumber);
  simulate->add_option("--out-dir", sim.out_dir, "Output directory");
  simulate->add_option("--prefix", sim.prefix, "Output file stem");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Rank MDR models and save a classifier");
  train_cmd->add_option("--data", train.data, "Training CSV/TSV")->required();
  train_cmd->add_option("--model", train.model_out, "Model file to write");
  train_cmd->add_option("--report", train.report, "Ranking report CSV");
  train_cmd->add_option("--report-top", train.report_top, "Models listed in the report");
  train_cmd->add_flag("--tune", train.tune, "Select hyperparameters by cross-validated random search");
  add_hyper(train_cmd, train.hyper);
  add_tuning(train_cmd, train.tuning);

  TuneCmdArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "Cross-validated hyperparameter search");
  tune_cmd->add_option("--data", tune_args.data, "Training CSV/TSV")->required();
  add_tuning(tune_cmd, tune_args.tuning);

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Score samples with a saved classifier");
  predict->add_option("--model", pred.model, "Model file")->required();
  predict->add_option("--data", pred.data, "CSV/TSV to score")->required();
  predict->add_option("--out", pred.out, "Predictions CSV");
  predict->add_flag("--auc", pred.auc, "Report AUC against the phenotype column");

  BenchmarkConfig bench;
  std::string bench_out = "benchmark.csv";
  auto* benchmark = app.add_subcommand("benchmark", "Replicated simulate/tune/evaluate comparison");
  benchmark->add_option("--scenario", bench.scenario, "Scenario 1-8, or 0 for one component per MAF group")
      ->check(CLI::Range(0, 8));
  benchmark->add_option("--maf", bench.maf, "MAF groups");
  benchmark->add_option("--h2", bench.h2, "Heritability per component");
  benchmark->add_option("--n", bench.n, "Samples per replicate before the 50/50 split");
  benchmark->add_option("--q", bench.q, "Total SNPs");
  benchmark->add_option("--reps", bench.replicates, "Replicates")->check(CLI::PositiveNumber);
  benchmark->add_option("--budget", bench.budget, "Tuning trials per replicate")->check(CLI::PositiveNumber);
  benchmark->add_option("--folds", bench.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  benchmark->add_option("--out", bench_out, "Report CSV");
  bool no_baseline = false;
  benchmark->add_flag("--no-baseline", no_baseline, "Skip the logistic baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("mbmdr");
  spdlog::set_default_logger(logger);
  spdlog::set_level(common.verbose >= 2 ? spdlog::level::debug
                                        : (common.verbose == 1 ? spdlog::level::info : spdlog::level::warn));
  std::optional<tbb::global_control> limit;
  if (common.threads > 0)
    limit.emplace(tbb::global_control::max_allowed_parallelism, static_cast<std::size_t>(common.threads));

  try {
    if (*simulate) return run_simulate(sim, common);
    if (*train_cmd) return run_train(train, common);
    if (*tune_cmd) return run_tune(tune_args, common);
    if (*predict) return run_predict(pred, common);
    if (*benchmark) {
      bench.run_baseline = !no_baseline;
      return run_bench(bench, bench_out, common);
    }
  } catch (const InfeasibleError& e) {
    spdlog::error("infeasible: {}", e.what());
    return kInfeasible;
  } catch (const IoError& e) {
    spdlog::error("I/O: {}", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("I/O: {}", e.what());
    return kIo;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    spdlog::error("unexpected: {}", e.what());
    return kUnexpected;
  }
  return kUsage;
}
