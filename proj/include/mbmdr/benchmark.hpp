#pragma once

// Replicated simulate / split / tune / evaluate runs for MB-MDR and the
// logistic baseline, with per-group median and quartiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <optional>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "mbmdr/auc.hpp"
#include "mbmdr/baseline.hpp"
#include "mbmdr/classifier.hpp"
#include "mbmdr/dataset.hpp"
#include "mbmdr/engine.hpp"
#include "mbmdr/error.hpp"
#include "mbmdr/random.hpp"
#include "mbmdr/simulate.hpp"
#include "mbmdr/tuner.hpp"

namespace mbmdr {

struct BenchmarkConfig {
  int scenario = 1;
  std::string maf = "0.4";  // component MAF groups, e.g. "0.2,0.2; 0.1"
  double h2 = 0.2;
  std::size_t n = 2000;
  std::size_t q = 100;
  std::size_t replicates = 20;
  std::size_t budget = 30;
  int folds = 5;
  std::uint64_t seed = 1;
  int threads = 0;
  bool run_baseline = true;
  SearchSpace space;
};

struct BenchmarkRow {
  std::string algorithm;  // "MBMDRC" or "LOGISTIC"
  std::size_t replicate = 0;
  std::string status = "ok";  // ok, infeasible, failed
  double auc = std::numeric_limits<double>::quiet_NaN();
  double cv_auc = std::numeric_limits<double>::quiet_NaN();
  std::optional<HyperParams> hyperparams;  // MBMDRC only
  double l2 = std::numeric_limits<double>::quiet_NaN();  // LOGISTIC only
  std::string message;
};

struct BenchmarkSummary {
  std::string algorithm;
  std::size_t count = 0;
  double median = std::numeric_limits<double>::quiet_NaN();
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<BenchmarkRow> rows;  // replicate-major, MBMDRC before LOGISTIC
  std::vector<BenchmarkSummary> summaries;

  const BenchmarkSummary* summary(const std::string& algorithm) const {
    for (const auto& s : summaries)
      if (s.algorithm == algorithm) return &s;
    return nullptr;
  }
};

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7, the R default).
inline double quantile7(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline BenchmarkSummary summarize(const std::string& algorithm, const std::vector<BenchmarkRow>& rows) {
  std::vector<double> aucs;
  for (const auto& r : rows)
    if (r.algorithm == algorithm && r.status == "ok") aucs.push_back(r.auc);
  return {algorithm, aucs.size(), quantile7(aucs, 0.5), quantile7(aucs, 0.25), quantile7(aucs, 0.75)};
}

/// Splits into two stratified halves; the first is used for training.
inline std::pair<GenotypeDataset, GenotypeDataset> split_half(const GenotypeDataset& ds, std::uint64_t seed) {
  const auto fa = stratified_kfold(ds, 2, seed);
  return {ds.subset(fa.members(0)), ds.subset(fa.members(1))};
}

namespace detail {

inline std::vector<BenchmarkRow> run_replicate(const BenchmarkConfig& cfg, std::size_t rep) {
  const std::uint64_t rep_seed = derive_seed(cfg.seed, rep);
  BenchmarkRow mb, lr;
  mb.algorithm = "MBMDRC";
  lr.algorithm = "LOGISTIC";
  mb.replicate = lr.replicate = rep;
  std::vector<BenchmarkRow> out;
  const auto finish = [&] {
    out.push_back(mb);
    if (cfg.run_baseline) out.push_back(lr);
    return out;
  };

  GenotypeDataset d1, d2;
  try {
    ScenarioSpec spec;
    spec.scenario = cfg.scenario;
    spec.components = components_for(cfg.scenario, parse_maf_groups(cfg.maf), cfg.h2);
    spec.q_total = cfg.q;
    spec.n = cfg.n;
    spec.seed = derive_seed(rep_seed, 0);
    auto halves = split_half(simulate_dataset(spec), derive_seed(rep_seed, 1));
    d1 = std::move(halves.first);
    d2 = std::move(halves.second);
  } catch (const InfeasibleError& e) {
    mb.status = lr.status = "infeasible";
    mb.message = lr.message = e.what();
    return finish();
  } catch (const Error& e) {
    mb.status = lr.status = "failed";
    mb.message = lr.message = e.what();
    return finish();
  }

  try {
    const auto tuned = tune(d1, cfg.space, cfg.budget, cfg.folds, derive_seed(rep_seed, 2));
    const auto clf = train_classifier(d1, tuned.best, EngineOptions{0});
    mb.auc = auc(predict_proba_all(clf, d2), d2.phenotype());
    mb.cv_auc = tuned.cv_auc;
    mb.hyperparams = tuned.best;
  } catch (const Error& e) {
    mb.status = "failed";
    mb.message = e.what();
  }
  if (cfg.run_baseline) {
    try {
      const auto sel = select_l2(d1, cfg.folds, derive_seed(rep_seed, 3));
      const auto model = fit_logistic(d1, sel.l2);
      lr.auc = auc(predict_logistic_all(model, d2), d2.phenotype());
      lr.cv_auc = sel.cv_auc;
      lr.l2 = sel.l2;
    } catch (const Error& e) {
      lr.status = "failed";
      lr.message = e.what();
    }
  }
  return finish();
}

}  // namespace detail

/// Replicates run in parallel; every random stream is derived from the root
/// seed and the replicate index, so the report does not depend on threads.
inline BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.replicates < 1) throw ValidationError("benchmark needs at least one replicate");
  if (cfg.budget < 1) throw ValidationError("tuning budget must be at least 1");
  cfg.space.validate();
  // Fail fast on malformed component specs before spawning work.
  components_for(cfg.scenario, parse_maf_groups(cfg.maf), cfg.h2);

  std::vector<std::vector<BenchmarkRow>> per_rep(cfg.replicates);
  parallel_indices(cfg.replicates, cfg.threads, [&](std::size_t rep) {
    per_rep[rep] = detail::run_replicate(cfg, rep);
    spdlog::info("replicate {}/{}: MBMDRC auc {:.4f} ({})", rep + 1, cfg.replicates, per_rep[rep][0].auc,
                 per_rep[rep][0].status);
  });
  BenchmarkReport report;
  report.config = cfg;
  for (auto& rows : per_rep)
    for (auto& r : rows) report.rows.push_back(std::move(r));
  report.summaries.push_back(summarize("MBMDRC", report.rows));
  if (cfg.run_baseline) report.summaries.push_back(summarize("LOGISTIC", report.rows));
  return report;
}

inline std::string format_g17(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One CSV holding raw rows and the summary rows computed from them.
inline void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report) {
  const auto& c = report.config;
  const auto prefix = [&](const char* type) {
    return std::string(type) + ',' + std::to_string(c.scenario) + ",\"" + c.maf + "\"," + format_g17(c.h2) + ',' +
           std::to_string(c.n);
  };
  out << "row_type,scenario,maf,h2,n,replicate,algorithm,status,auc,q25,q75,count,cv_auc,order,order_range,"
         "adjustment,alpha,min_cell_size,o_as_na,s,l2,message\n";
  for (const auto& r : report.rows) {
    std::string msg = r.message;
    for (auto& ch : msg)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
    out << prefix("raw") << ',' << r.replicate << ',' << r.algorithm << ',' << r.status << ','
        << format_g17(r.auc) << ",,,," << format_g17(r.cv_auc) << ',';
    if (r.hyperparams) {
      const auto& hp = *r.hyperparams;
      out << hp.order << ',' << (hp.order_range ? "true" : "false") << ',' << to_string(hp.adjustment) << ','
          << format_g17(hp.alpha) << ',' << hp.min_cell_size << ',' << (hp.o_as_na ? "true" : "false") << ','
          << hp.s << ',';
    } else {
      out << ",,,,,,,";
    }
    out << (std::isnan(r.l2) ? "" : format_g17(r.l2)) << ',' << msg << '\n';
  }
  for (const auto& s : report.summaries) {
    out << prefix("summary") << ",," << s.algorithm << ",," << format_g17(s.median) << ','
        << format_g17(s.q25) << ',' << format_g17(s.q75) << ',' << s.count << ",,,,,,,,,,\n";
  }
}

}  // namespace mbmdr
