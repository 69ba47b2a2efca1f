#pragma once

// Individual prediction from the top-s MDR models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mbmdr/dataset.hpp"
#include "mbmdr/engine.hpp"
#include "mbmdr/error.hpp"

namespace mbmdr {

struct MbmdrClassifier {
  std::vector<MdrModel> models;  // ranking order, at most s entries
  HyperParams hyperparams;
  double fallback = 0.5;
  std::vector<std::string> feature_names;
  std::vector<int> levels;

  int s() const { return hyperparams.s; }
  bool o_as_na() const { return hyperparams.o_as_na; }
  std::size_t q() const { return feature_names.size(); }
};

/// Keeps the first min(s, available) models of a ranking.
inline MbmdrClassifier make_classifier(ModelRanking ranking, const GenotypeDataset& train) {
  MbmdrClassifier clf;
  clf.hyperparams = ranking.hyperparams;
  const auto keep = std::min(ranking.models.size(), static_cast<std::size_t>(clf.hyperparams.s));
  ranking.models.resize(keep);
  clf.models = std::move(ranking.models);
  clf.fallback = train.case_fraction();
  clf.feature_names.assign(train.feature_names().begin(), train.feature_names().end());
  clf.levels.assign(train.levels().begin(), train.levels().end());
  return clf;
}

inline MbmdrClassifier train_classifier(const GenotypeDataset& train, const HyperParams& hp,
                                        const EngineOptions& opts = {}) {
  return make_classifier(enumerate_and_rank(train, hp, opts), train);
}

namespace detail {

inline void check_input(const MbmdrClassifier& clf, std::span<const Level> x) {
  if (x.size() != clf.q())
    throw ValidationError("input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(clf.q()));
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] != kMissing && x[j] >= clf.levels[j])
      throw ValidationError("feature '" + clf.feature_names[j] + "': level " + std::to_string(x[j]) +
                            " is outside the " + std::to_string(clf.levels[j]) +
                            " levels seen in training");
}

// Label of x's cell, O when x is missing a tuple feature.
inline Label cell_label(const MdrModel& m, std::span<const Level> x) {
  const auto idx = m.index_of(x);
  return idx ? m.labels[*idx] : Label::kO;
}

}  // namespace detail

/// Average case proportion of x's cells over the retained models. O cells
/// (and cells x cannot be placed in) are skipped when o_as_na is set and
/// replaced by the training case proportion otherwise.
inline double predict_proba(const MbmdrClassifier& clf, std::span<const Level> x) {
  detail::check_input(clf, x);
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& m : clf.models) {
    const auto idx = m.index_of(x);
    if (idx && m.labels[*idx] != Label::kO) {
      sum += m.case_proportions[*idx];
      ++used;
    } else if (!clf.o_as_na()) {
      sum += clf.fallback;
      ++used;
    }
  }
  return used == 0 ? clf.fallback : sum / static_cast<double>(used);
}

/// Majority of H versus L labels; ties (including no labeled cell at all) go
/// to the class favoured by the training case proportion.
inline int predict_class(const MbmdrClassifier& clf, std::span<const Level> x) {
  detail::check_input(clf, x);
  int h = 0, l = 0;
  for (const auto& m : clf.models) {
    const auto lab = detail::cell_label(m, x);
    h += lab == Label::kH;
    l += lab == Label::kL;
  }
  if (h != l) return h > l ? 1 : 0;
  return clf.fallback > 0.5 ? 1 : 0;
}

/// Sum of +1 per H cell and -1 per L cell.
inline int risk_score(const MbmdrClassifier& clf, std::span<const Level> x) {
  detail::check_input(clf, x);
  int score = 0;
  for (const auto& m : clf.models) {
    const auto lab = detail::cell_label(m, x);
    score += lab == Label::kH ? 1 : (lab == Label::kL ? -1 : 0);
  }
  return score;
}

struct Prediction {
  double proba = 0.0;
  int label = 0;
  int score = 0;
};

/// Predictions for every row of `ds`, whose columns must already be in the
/// classifier's feature order.
inline std::vector<Prediction> predict_all(const MbmdrClassifier& clf, const GenotypeDataset& ds) {
  std::vector<Prediction> out(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto x = ds.row(i);
    out[i] = {predict_proba(clf, x), predict_class(clf, x), risk_score(clf, x)};
  }
  return out;
}

inline std::vector<double> predict_proba_all(const MbmdrClassifier& clf, const GenotypeDataset& ds) {
  std::vector<double> out(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) out[i] = predict_proba(clf, ds.row(i));
  return out;
}

/// Source column of every classifier feature within `names`. The two feature
/// sets must coincide (order may differ).
inline std::vector<std::size_t> feature_order(const MbmdrClassifier& clf,
                                              std::span<const std::string> names) {
  if (names.size() != clf.q())
    throw ValidationError("schema mismatch: data has " + std::to_string(names.size()) +
                          " features, model has " + std::to_string(clf.q()));
  std::vector<std::size_t> source(clf.q());
  for (std::size_t j = 0; j < clf.q(); ++j) {
    const auto it = std::find(names.begin(), names.end(), clf.feature_names[j]);
    if (it == names.end())
      throw ValidationError("schema mismatch: feature '" + clf.feature_names[j] + "' not in data");
    source[j] = static_cast<std::size_t>(it - names.begin());
  }
  return source;
}

/// Rows of a parsed table rearranged into the classifier's feature order.
inline std::vector<std::vector<Level>> aligned_rows(const MbmdrClassifier& clf, const GenotypeTable& table) {
  const auto source = feature_order(clf, table.feature_names);
  std::vector<std::vector<Level>> rows(table.n(), std::vector<Level>(clf.q()));
  for (std::size_t i = 0; i < table.n(); ++i)
    for (std::size_t j = 0; j < clf.q(); ++j) rows[i][j] = table.columns[source[j]][i];
  return rows;
}

}  // namespace mbmdr
