#pragma once

// Seeded random search over MB-MDR hyperparameters with stratified k-fold
// cross-validation scored by AUC.

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "mbmdr/auc.hpp"
#include "mbmdr/classifier.hpp"
#include "mbmdr/dataset.hpp"
#include "mbmdr/engine.hpp"
#include "mbmdr/error.hpp"
#include "mbmdr/random.hpp"

namespace mbmdr {

struct SearchSpace {
  std::vector<int> orders{1, 2};
  std::vector<bool> order_ranges{true, false};
  std::vector<Adjustment> adjustments{Adjustment::kNone, Adjustment::kCodominant};
  double alpha_lo = 0.01, alpha_hi = 1.0;  // log-uniform, open interval
  int min_cell_size_lo = 0, min_cell_size_hi = 50;
  std::vector<bool> o_as_na{true, false};
  std::vector<int> s_grid{1, 2, 5, 10, 20, 50, 100};

  void validate() const {
    if (orders.empty() || order_ranges.empty() || adjustments.empty() || o_as_na.empty() || s_grid.empty())
      throw ValidationError("search space has an empty dimension");
    if (!(alpha_lo > 0.0 && alpha_lo < alpha_hi && alpha_hi <= 1.0))
      throw ValidationError("search space alpha bounds must satisfy 0 < lo < hi <= 1");
    if (min_cell_size_lo < 0 || min_cell_size_hi < min_cell_size_lo)
      throw ValidationError("search space min_cell_size bounds are invalid");
  }
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(v.size()) - 1))];
}

inline bool pick(Rng& rng, const std::vector<bool>& v) {
  return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(v.size()) - 1))];
}

inline HyperParams draw_hyperparams(Rng& rng, const SearchSpace& space) {
  HyperParams hp;
  hp.order = pick(rng, space.orders);
  hp.order_range = pick(rng, space.order_ranges);
  hp.adjustment = pick(rng, space.adjustments);
  // Redraw the (measure-zero) endpoint so alpha stays inside the open interval.
  do {
    hp.alpha = std::exp(uniform(rng, std::log(space.alpha_lo), std::log(space.alpha_hi)));
  } while (!(hp.alpha > space.alpha_lo && hp.alpha < space.alpha_hi));
  hp.min_cell_size = static_cast<int>(uniform_int(rng, space.min_cell_size_lo, space.min_cell_size_hi));
  hp.o_as_na = pick(rng, space.o_as_na);
  hp.s = pick(rng, space.s_grid);
  return hp;
}

struct Trial {
  std::size_t index = 0;
  HyperParams hyperparams;
  std::vector<double> fold_auc;    // NaN where the fold failed
  std::vector<double> fold_seconds;
  double mean_auc = std::numeric_limits<double>::quiet_NaN();  // NaN for a failed trial
  std::string error;

  bool failed() const { return std::isnan(mean_auc); }
};

struct TuneResult {
  HyperParams best;
  double cv_auc = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_index = 0;
  std::vector<Trial> trials;
  std::uint64_t seed = 0;
  int folds = 0;
  double wall_seconds = 0.0;
};

struct TuneOptions {
  int threads = 0;
  std::uint64_t max_tuples = 5'000'000;
};

namespace detail {

struct FoldData {
  GenotypeDataset train, test;
  std::array<std::optional<TestedScan>, 2> scans;  // indexed by Adjustment
};

inline double fold_auc(const FoldData& fold, const HyperParams& hp) {
  const auto& scan = fold.scans[static_cast<std::size_t>(hp.adjustment)];
  auto clf = make_classifier(rank_scan(*scan, hp, static_cast<std::size_t>(hp.s)), fold.train);
  return auc(predict_proba_all(clf, fold.test), fold.test.phenotype());
}

}  // namespace detail

/// Draws `budget` configurations, scores each by mean k-fold CV AUC and keeps
/// the best; ties go to the earlier draw and failed draws are never chosen.
inline TuneResult tune(const GenotypeDataset& ds, const SearchSpace& space, std::size_t budget, int k,
                       std::uint64_t seed, const TuneOptions& opts = {}) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  if (budget < 1) throw ValidationError("tuning budget must be at least 1");
  space.validate();

  TuneResult result;
  result.seed = seed;
  result.folds = k;
  Rng draw_rng(derive_seed(seed, 0));
  result.trials.resize(budget);
  int max_order = 1;
  std::array<bool, 2> need_scan{false, false};
  for (std::size_t t = 0; t < budget; ++t) {
    result.trials[t].index = t;
    result.trials[t].hyperparams = draw_hyperparams(draw_rng, space);
    max_order = std::max(max_order, result.trials[t].hyperparams.order);
    need_scan[static_cast<std::size_t>(result.trials[t].hyperparams.adjustment)] = true;
  }

  const auto folds = stratified_kfold(ds, k, derive_seed(seed, 1));
  std::vector<detail::FoldData> fold_data;
  for (int f = 0; f < k; ++f) {
    const auto train_rows = folds.complement(f), test_rows = folds.members(f);
    fold_data.push_back({ds.subset(train_rows), ds.subset(test_rows), {}});
  }
  // Cell tests per fold do not depend on alpha, min_cell_size, o_as_na or s.
  const EngineOptions eng{1, opts.max_tuples};
  const std::size_t scan_jobs = static_cast<std::size_t>(k) * 2;
  std::vector<std::string> scan_errors(scan_jobs);
  parallel_indices(scan_jobs, opts.threads, [&](std::size_t job) {
    const auto f = job / 2, a = job % 2;
    if (!need_scan[a]) return;
    try {
      fold_data[f].scans[a] = scan_cells(fold_data[f].train, max_order, static_cast<Adjustment>(a), eng);
    } catch (const Error& e) {
      scan_errors[job] = e.what();
    }
  });

  const std::size_t jobs = budget * static_cast<std::size_t>(k);
  for (auto& tr : result.trials) {
    tr.fold_auc.assign(static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());
    tr.fold_seconds.assign(static_cast<std::size_t>(k), 0.0);
  }
  std::vector<std::string> job_errors(jobs);
  parallel_indices(jobs, opts.threads, [&](std::size_t job) {
    const auto t = job / static_cast<std::size_t>(k), f = job % static_cast<std::size_t>(k);
    auto& tr = result.trials[t];
    const auto a = static_cast<std::size_t>(tr.hyperparams.adjustment);
    const auto t0 = Clock::now();
    if (!fold_data[f].scans[a]) {
      job_errors[job] = scan_errors[f * 2 + a];
      return;
    }
    try {
      tr.fold_auc[f] = detail::fold_auc(fold_data[f], tr.hyperparams);
    } catch (const Error& e) {
      job_errors[job] = e.what();
    }
    tr.fold_seconds[f] = std::chrono::duration<double>(Clock::now() - t0).count();
  });

  std::optional<std::size_t> best;
  for (auto& tr : result.trials) {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t f = 0; f < tr.fold_auc.size(); ++f) {
      if (std::isnan(tr.fold_auc[f])) {
        ok = false;
        if (tr.error.empty()) tr.error = job_errors[tr.index * static_cast<std::size_t>(k) + f];
      }
      sum += tr.fold_auc[f];
    }
    if (!ok) {
      spdlog::debug("trial {} failed: {}", tr.index, tr.error);
      continue;
    }
    tr.mean_auc = sum / static_cast<double>(k);
    if (!best || tr.mean_auc > result.trials[*best].mean_auc) best = tr.index;
  }
  if (!best) throw ValidationError("every tuning trial failed: " + result.trials.front().error);
  result.best_index = *best;
  result.best = result.trials[*best].hyperparams;
  result.cv_auc = result.trials[*best].mean_auc;
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return result;
}

/// One row per (trial, fold).
inline void write_tune_trace(std::ostream& out, const TuneResult& r) {
  out << "trial,fold,order,order_range,adjustment,alpha,min_cell_size,o_as_na,s,fold_auc,mean_auc,seconds,"
         "selected,error\n";
  char buf[64];
  const auto num = [&](double v) -> std::string {
    if (std::isnan(v)) return "NA";
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& tr : r.trials) {
    const auto& hp = tr.hyperparams;
    for (std::size_t f = 0; f < tr.fold_auc.size(); ++f) {
      std::string err = tr.error;
      for (auto& c : err)
        if (c == ',' || c == '\n' || c == '"') c = ';';
      out << tr.index << ',' << f << ',' << hp.order << ',' << (hp.order_range ? "true" : "false") << ','
          << to_string(hp.adjustment) << ',' << num(hp.alpha) << ',' << hp.min_cell_size << ','
          << (hp.o_as_na ? "true" : "false") << ',' << hp.s << ',' << num(tr.fold_auc[f]) << ','
          << num(tr.mean_auc) << ',' << num(tr.fold_seconds[f]) << ',' << (tr.index == r.best_index ? 1 : 0)
          << ',' << err << '\n';
    }
  }
}

}  // namespace mbmdr
