#pragma once

// Versioned JSON persistence of a trained classifier.
//
// {
//   "format": "mbmdr-classifier", "version": 1,
//   "hyperparams": {...}, "fallback": 0.5,
//   "features": [{"name": "SNP1", "levels": 3}, ...],
//   "models": [{"tuple": [3, 17], "statistic": 41.2,
//               "cells": [{"label": "H", "case_proportion": 0.7, "cases": 14, "controls": 6}, ...]}]
// }
//
// Doubles are written in shortest round-trip form, so a reload reproduces
// every proportion bit for bit. Empty cells carry "case_proportion": null.

#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "mbmdr/classifier.hpp"
#include "mbmdr/error.hpp"

namespace mbmdr {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const HyperParams& hp) {
  return {{"order", hp.order},
          {"order_range", hp.order_range},
          {"adjustment", to_string(hp.adjustment)},
          {"alpha", hp.alpha},
          {"min_cell_size", hp.min_cell_size},
          {"o_as_na", hp.o_as_na},
          {"s", hp.s}};
}

inline HyperParams hyperparams_from_json(const nlohmann::json& j) {
  HyperParams hp;
  hp.order = j.at("order").get<int>();
  hp.order_range = j.at("order_range").get<bool>();
  hp.adjustment = parse_adjustment(j.at("adjustment").get<std::string>());
  hp.alpha = j.at("alpha").get<double>();
  hp.min_cell_size = j.at("min_cell_size").get<int>();
  hp.o_as_na = j.at("o_as_na").get<bool>();
  hp.s = j.at("s").get<int>();
  hp.validate();
  return hp;
}

inline nlohmann::json to_json(const MbmdrClassifier& clf) {
  using nlohmann::json;
  json features = json::array();
  for (std::size_t j = 0; j < clf.q(); ++j)
    features.push_back({{"name", clf.feature_names[j]}, {"levels", clf.levels[j]}});
  json models = json::array();
  for (const auto& m : clf.models) {
    json cells = json::array();
    for (std::size_t c = 0; c < m.labels.size(); ++c) {
      json cell = {{"label", std::string(1, to_char(m.labels[c]))},
                   {"cases", m.cases[c]},
                   {"controls", m.controls[c]}};
      cell["case_proportion"] = std::isnan(m.case_proportions[c]) ? json(nullptr) : json(m.case_proportions[c]);
      cells.push_back(std::move(cell));
    }
    models.push_back({{"tuple", m.tuple}, {"statistic", m.statistic}, {"cells", std::move(cells)}});
  }
  return {{"format", "mbmdr-classifier"},
          {"version", kModelFormatVersion},
          {"hyperparams", to_json(clf.hyperparams)},
          {"fallback", clf.fallback},
          {"features", std::move(features)},
          {"models", std::move(models)}};
}

inline MbmdrClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "mbmdr-classifier")
      throw ValidationError("not an mbmdr classifier file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw ValidationError("unsupported model file version " + std::to_string(version) +
                            " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
    MbmdrClassifier clf;
    clf.hyperparams = hyperparams_from_json(j.at("hyperparams"));
    clf.fallback = j.at("fallback").get<double>();
    if (!(clf.fallback > 0.0 && clf.fallback < 1.0)) throw ValidationError("fallback must lie in (0,1)");
    for (const auto& f : j.at("features")) {
      clf.feature_names.push_back(f.at("name").get<std::string>());
      const int lv = f.at("levels").get<int>();
      if (lv < 2 || lv > kMaxLevels) throw ValidationError("feature level count out of range");
      clf.levels.push_back(lv);
    }
    for (const auto& jm : j.at("models")) {
      MdrModel m;
      m.fallback = clf.fallback;
      m.statistic = jm.at("statistic").get<double>();
      std::size_t cells = 1;
      for (const auto& t : jm.at("tuple")) {
        const auto idx = t.get<std::size_t>();
        if (idx >= clf.q()) throw ValidationError("model tuple refers to an unknown feature");
        m.tuple.push_back(idx);
        m.radices.push_back(clf.levels[idx]);
        cells *= static_cast<std::size_t>(clf.levels[idx]);
      }
      if (m.tuple.empty()) throw ValidationError("model with an empty tuple");
      const auto& jc = jm.at("cells");
      if (jc.size() != cells) throw ValidationError("model cell count does not match its tuple");
      for (const auto& c : jc) {
        m.labels.push_back(parse_label(c.at("label").get<std::string>()));
        m.cases.push_back(c.at("cases").get<std::int64_t>());
        m.controls.push_back(c.at("controls").get<std::int64_t>());
        const auto& p = c.at("case_proportion");
        m.case_proportions.push_back(p.is_null() ? std::numeric_limits<double>::quiet_NaN() : p.get<double>());
      }
      clf.models.push_back(std::move(m));
    }
    if (clf.models.size() > static_cast<std::size_t>(clf.hyperparams.s))
      throw ValidationError("model file holds more models than s");
    return clf;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file schema violation: ") + e.what());
  }
}

inline void write_model(std::ostream& out, const MbmdrClassifier& clf) { out << to_json(clf).dump(1) << '\n'; }

inline MbmdrClassifier read_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  return classifier_from_json(j);
}

inline void save_model(const std::filesystem::path& path, const MbmdrClassifier& clf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_model(out, clf);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline MbmdrClassifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_model(in);
}

}  // namespace mbmdr
