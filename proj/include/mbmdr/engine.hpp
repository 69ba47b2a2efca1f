#pragma once

// MB-MDR core: cell grids per feature tuple, H/L/O cell labels, the pooled
// model statistic, and the exhaustive ranked scan over tuples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "mbmdr/assoc.hpp"
#include "mbmdr/dataset.hpp"
#include "mbmdr/error.hpp"
#include "mbmdr/stats.hpp"

namespace mbmdr {

enum class Adjustment { kNone, kCodominant };

inline const char* to_string(Adjustment a) { return a == Adjustment::kNone ? "NONE" : "CODOMINANT"; }

inline Adjustment parse_adjustment(const std::string& s) {
  if (s == "NONE" || s == "none") return Adjustment::kNone;
  if (s == "CODOMINANT" || s == "codominant") return Adjustment::kCodominant;
  throw ValidationError("adjustment must be NONE or CODOMINANT, got '" + s + "'");
}

enum class Label : std::uint8_t { kO, kH, kL };

inline char to_char(Label l) { return l == Label::kH ? 'H' : (l == Label::kL ? 'L' : 'O'); }

inline Label parse_label(const std::string& s) {
  if (s == "H") return Label::kH;
  if (s == "L") return Label::kL;
  if (s == "O") return Label::kO;
  throw ValidationError("cell label must be H, L or O, got '" + s + "'");
}

struct HyperParams {
  int order = 2;                  // 1 or 2
  bool order_range = false;       // also scan every lower order
  Adjustment adjustment = Adjustment::kNone;
  double alpha = 0.1;             // cell significance level
  int min_cell_size = 10;         // smaller cells are always O
  bool o_as_na = true;            // O cells skipped (true) or use the fallback (false)
  int s = 1;                      // number of top models used for prediction

  void validate() const {
    if (order < 1 || order > 2) throw ValidationError("order must be 1 or 2");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0,1]");
    if (min_cell_size < 0 || min_cell_size > 50) throw ValidationError("min_cell_size must lie in [0,50]");
    if (s < 1) throw ValidationError("s must be positive");
  }

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct Cell {
  std::int64_t cases = 0;
  std::int64_t controls = 0;
  TestResult test;
  Label label = Label::kO;

  std::int64_t size() const { return cases + controls; }
  /// NaN for an empty cell.
  double case_proportion() const {
    return size() == 0 ? std::numeric_limits<double>::quiet_NaN()
                       : static_cast<double>(cases) / static_cast<double>(size());
  }
};

using Tuple = std::vector<std::size_t>;

/// Mixed-radix cell index of a genotype vector, or nothing if any feature of
/// the tuple is missing.
inline std::optional<std::size_t> cell_index(const Tuple& tuple, std::span<const int> radices,
                                             std::span<const Level> x) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < tuple.size(); ++k) {
    const Level v = x[tuple[k]];
    if (v == kMissing) return std::nullopt;
    idx = idx * static_cast<std::size_t>(radices[k]) + v;
  }
  return idx;
}

struct CellTable {
  Tuple tuple;
  std::vector<int> radices;
  std::vector<Cell> cells;

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& c : cells) t += c.size();
    return t;
  }
  std::int64_t total_cases() const {
    std::int64_t t = 0;
    for (const auto& c : cells) t += c.cases;
    return t;
  }
  std::optional<std::size_t> index_of(std::span<const Level> x) const {
    return cell_index(tuple, radices, x);
  }
};

/// Counts cases and controls per level combination of `tuple`. Samples missing
/// any feature of the tuple are left out.
inline CellTable arrange_cells(const GenotypeDataset& ds, const Tuple& tuple) {
  if (tuple.empty() || tuple.size() > 2) throw ContractError("arrange_cells: tuple order must be 1 or 2");
  for (std::size_t k = 0; k < tuple.size(); ++k) {
    if (tuple[k] >= ds.q()) throw ContractError("arrange_cells: feature index out of range");
    if (k > 0 && tuple[k] <= tuple[k - 1])
      throw ContractError("arrange_cells: tuple must be strictly increasing (no duplicates)");
  }
  CellTable ct;
  ct.tuple = tuple;
  std::size_t total = 1;
  for (auto j : tuple) {
    ct.radices.push_back(ds.levels(j));
    total *= static_cast<std::size_t>(ds.levels(j));
  }
  ct.cells.resize(total);
  const auto y = ds.phenotype();
  if (tuple.size() == 1) {
    const auto a = ds.column(tuple[0]);
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (a[i] == kMissing) continue;
      auto& c = ct.cells[a[i]];
      (y[i] ? c.cases : c.controls)++;
    }
  } else {
    const auto a = ds.column(tuple[0]);
    const auto b = ds.column(tuple[1]);
    const auto lb = static_cast<std::size_t>(ct.radices[1]);
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (a[i] == kMissing || b[i] == kMissing) continue;
      auto& c = ct.cells[a[i] * lb + b[i]];
      (y[i] ? c.cases : c.controls)++;
    }
  }
  return ct;
}

/// Fills in the per-cell association test. Codominant adjustment applies to
/// tuples of two or more features; single features always use the plain
/// chi-square test.
inline CellTable test_cells(CellTable ct, Adjustment adjustment) {
  const std::int64_t total = ct.total(), total_cases = ct.total_cases();
  if (adjustment == Adjustment::kCodominant && ct.tuple.size() >= 2) {
    std::vector<std::int64_t> cases(ct.cells.size()), controls(ct.cells.size());
    for (std::size_t m = 0; m < ct.cells.size(); ++m) {
      cases[m] = ct.cells[m].cases;
      controls[m] = ct.cells[m].controls;
    }
    const CodominantAdjuster adjuster(ct.radices, cases, controls);
    for (std::size_t m = 0; m < ct.cells.size(); ++m) ct.cells[m].test = adjuster.test(m);
    return ct;
  }
  for (auto& c : ct.cells)
    c.test = two_by_two_chisq(c.cases, c.controls, total_cases - c.cases, (total - total_cases) - c.controls);
  return ct;
}

/// H, L or O from already computed cell tests.
inline void assign_labels(CellTable& ct, double alpha, int min_cell_size) {
  for (auto& c : ct.cells) {
    const bool significant = c.size() >= min_cell_size && c.test.p_value < alpha;
    if (significant && c.test.direction > 0) {
      c.label = Label::kH;
    } else if (significant && c.test.direction < 0) {
      c.label = Label::kL;
    } else {
      c.label = Label::kO;
    }
  }
}

/// Tests every cell against the rest of the grid and assigns H, L or O.
inline CellTable label_cells(CellTable ct, const HyperParams& hp) {
  ct = test_cells(std::move(ct), hp.adjustment);
  assign_labels(ct, hp.alpha, hp.min_cell_size);
  return ct;
}

/// Form that mirrors the dataset-level call; the grid already carries all it needs.
inline CellTable label_cells(CellTable ct, const HyperParams& hp, const GenotypeDataset&) {
  return label_cells(std::move(ct), hp);
}

/// Codominant-adjusted likelihood-ratio test of one cell of a tuple with two
/// or more features.
inline TestResult adjusted_cell_lrt(const GenotypeDataset& ds, const Tuple& tuple,
                                    std::span<const Level> cell) {
  if (tuple.size() < 2) throw ContractError("adjusted_cell_lrt: adjustment needs a tuple of order >= 2");
  if (cell.size() != tuple.size()) throw ContractError("adjusted_cell_lrt: cell has wrong arity");
  const auto ct = arrange_cells(ds, tuple);
  std::size_t idx = 0;
  for (std::size_t k = 0; k < tuple.size(); ++k) {
    if (cell[k] >= ct.radices[k]) throw ContractError("adjusted_cell_lrt: cell level out of range");
    idx = idx * static_cast<std::size_t>(ct.radices[k]) + cell[k];
  }
  std::vector<std::int64_t> cases(ct.cells.size()), controls(ct.cells.size());
  for (std::size_t m = 0; m < ct.cells.size(); ++m) {
    cases[m] = ct.cells[m].cases;
    controls[m] = ct.cells[m].controls;
  }
  return CodominantAdjuster(ct.radices, cases, controls).test(idx);
}

struct MdrModel {
  Tuple tuple;
  std::vector<int> radices;
  std::vector<Label> labels;
  std::vector<double> case_proportions;  // NaN for empty cells
  std::vector<std::int64_t> cases, controls;
  double statistic = 0.0;
  double fallback = 0.5;  // global training case proportion

  std::optional<std::size_t> index_of(std::span<const Level> x) const {
    return cell_index(tuple, radices, x);
  }
};

/// Pools H cells against every other sample of the grid, likewise L cells,
/// and keeps the larger of the two unadjusted chi-squares.
inline MdrModel model_statistic(const CellTable& ct, double fallback) {
  MdrModel m;
  m.tuple = ct.tuple;
  m.radices = ct.radices;
  m.fallback = fallback;
  std::int64_t h_cases = 0, h_controls = 0, l_cases = 0, l_controls = 0;
  bool any_h = false, any_l = false;
  for (const auto& c : ct.cells) {
    m.labels.push_back(c.label);
    m.case_proportions.push_back(c.case_proportion());
    m.cases.push_back(c.cases);
    m.controls.push_back(c.controls);
    if (c.label == Label::kH) {
      any_h = true;
      h_cases += c.cases;
      h_controls += c.controls;
    } else if (c.label == Label::kL) {
      any_l = true;
      l_cases += c.cases;
      l_controls += c.controls;
    }
  }
  const std::int64_t total = ct.total(), total_cases = ct.total_cases();
  const std::int64_t total_controls = total - total_cases;
  const double t_h = any_h ? two_by_two_chisq(h_cases, h_controls, total_cases - h_cases,
                                              total_controls - h_controls).statistic
                           : 0.0;
  const double t_l = any_l ? two_by_two_chisq(l_cases, l_controls, total_cases - l_cases,
                                              total_controls - l_controls).statistic
                           : 0.0;
  m.statistic = std::max(t_h, t_l);
  return m;
}

/// Strict weak order of the ranking: larger statistic first, then the
/// lexicographically smaller tuple.
inline bool ranks_before(const MdrModel& a, const MdrModel& b) {
  if (a.statistic != b.statistic) return a.statistic > b.statistic;
  return a.tuple < b.tuple;
}

struct ModelRanking {
  std::vector<MdrModel> models;
  HyperParams hyperparams;
};

struct EngineOptions {
  int threads = 0;                       // 0 = TBB default
  std::uint64_t max_tuples = 5'000'000;  // enumeration guard
};

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Tuples scanned for the given order settings: exactly `order` features, or
/// every order from 1 up to `order` when `order_range` is set.
inline std::vector<Tuple> enumerate_tuples(std::size_t q, int order, bool order_range) {
  std::vector<Tuple> out;
  const int lo = order_range ? 1 : order;
  for (int d = lo; d <= order; ++d) {
    if (d == 1) {
      for (std::size_t j = 0; j < q; ++j) out.push_back({j});
    } else {
      for (std::size_t j = 0; j < q; ++j)
        for (std::size_t k = j + 1; k < q; ++k) out.push_back({j, k});
    }
  }
  return out;
}

/// Runs `body(i)` for i in [0, count) on `threads` workers (0 = default).
template <typename Body>
void parallel_indices(std::size_t count, int threads, Body&& body) {
  const auto run = [&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, count), [&](const auto& r) {
      for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
    });
  };
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
  } else if (threads > 1) {
    tbb::task_arena arena(threads);
    arena.execute(run);
  } else {
    run();
  }
}

/// Builds, scores and sorts every MDR model of the requested order(s).
inline ModelRanking enumerate_and_rank(const GenotypeDataset& ds, const HyperParams& hp,
                                       const EngineOptions& opts = {}) {
  hp.validate();
  if (ds.q() < static_cast<std::size_t>(hp.order))
    throw ValidationError("order " + std::to_string(hp.order) + " exceeds the feature count");
  std::uint64_t count = 0;
  for (int d = hp.order_range ? 1 : hp.order; d <= hp.order; ++d) count += binomial(ds.q(), static_cast<std::uint64_t>(d));
  if (count > opts.max_tuples)
    throw ValidationError(std::to_string(count) + " feature tuples exceed the enumeration cap of " +
                          std::to_string(opts.max_tuples) + "; reduce q or raise the cap");

  const auto tuples = enumerate_tuples(ds.q(), hp.order, hp.order_range);
  const double fallback = ds.case_fraction();
  ModelRanking ranking;
  ranking.hyperparams = hp;
  ranking.models.resize(tuples.size());
  parallel_indices(tuples.size(), opts.threads, [&](std::size_t i) {
    ranking.models[i] = model_statistic(label_cells(arrange_cells(ds, tuples[i]), hp), fallback);
  });
  std::sort(ranking.models.begin(), ranking.models.end(), ranks_before);
  return ranking;
}

/// Tested (but unlabeled) grids of every tuple up to `max_order` for one
/// adjustment. Labels depend on alpha and min_cell_size only through a cheap
/// relabeling, so repeated fits on the same data reuse the scan.
struct TestedScan {
  Adjustment adjustment = Adjustment::kNone;
  int max_order = 2;
  std::vector<CellTable> tables;  // order-1 tuples first, then order-2
  double fallback = 0.5;
};

inline TestedScan scan_cells(const GenotypeDataset& ds, int max_order, Adjustment adjustment,
                             const EngineOptions& opts = {}) {
  if (max_order < 1 || max_order > 2) throw ValidationError("scan order must be 1 or 2");
  if (ds.q() < static_cast<std::size_t>(max_order))
    throw ValidationError("order " + std::to_string(max_order) + " exceeds the feature count");
  std::uint64_t count = 0;
  for (int d = 1; d <= max_order; ++d) count += binomial(ds.q(), static_cast<std::uint64_t>(d));
  if (count > opts.max_tuples)
    throw ValidationError(std::to_string(count) + " feature tuples exceed the enumeration cap of " +
                          std::to_string(opts.max_tuples) + "; reduce q or raise the cap");
  const auto tuples = enumerate_tuples(ds.q(), max_order, true);
  TestedScan scan;
  scan.adjustment = adjustment;
  scan.max_order = max_order;
  scan.fallback = ds.case_fraction();
  scan.tables.resize(tuples.size());
  parallel_indices(tuples.size(), opts.threads, [&](std::size_t i) {
    scan.tables[i] = test_cells(arrange_cells(ds, tuples[i]), adjustment);
  });
  return scan;
}

/// The `keep` best models of a cached scan under `hp`, in ranking order.
/// Matches the head of enumerate_and_rank on the scanned data.
inline ModelRanking rank_scan(const TestedScan& scan, const HyperParams& hp, std::size_t keep) {
  hp.validate();
  if (hp.adjustment != scan.adjustment) throw ContractError("rank_scan: adjustment differs from the scan");
  if (hp.order > scan.max_order) throw ContractError("rank_scan: order exceeds the scan");
  ModelRanking ranking;
  ranking.hyperparams = hp;
  for (const auto& table : scan.tables) {
    const auto d = static_cast<int>(table.tuple.size());
    if (d > hp.order || (!hp.order_range && d != hp.order)) continue;
    CellTable ct = table;
    assign_labels(ct, hp.alpha, hp.min_cell_size);
    ranking.models.push_back(model_statistic(ct, scan.fallback));
  }
  keep = std::min(keep, ranking.models.size());
  std::partial_sort(ranking.models.begin(), ranking.models.begin() + static_cast<std::ptrdiff_t>(keep),
                    ranking.models.end(), ranks_before);
  ranking.models.resize(keep);
  return ranking;
}

}  // namespace mbmdr
