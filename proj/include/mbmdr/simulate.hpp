#pragma once

// Case-control datasets from independent HWE SNPs whose effect components
// (single-SNP main effects, pure two- and three-way interactions) are combined
// on the logit scale.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbmdr/dataset.hpp"
#include "mbmdr/error.hpp"
#include "mbmdr/link.hpp"
#include "mbmdr/penetrance.hpp"
#include "mbmdr/random.hpp"

namespace mbmdr {

struct ComponentSpec {
  std::vector<double> mafs;  // 1 = main effect, 2 or 3 = pure interaction
  double h2 = 0.1;

  std::size_t size() const { return mafs.size(); }
};

struct ScenarioSpec {
  int scenario = 0;  // 1..8 for the presets, 0 for a custom component list
  std::vector<ComponentSpec> components;
  std::size_t q_total = 100;
  std::size_t n = 1000;
  double noise_maf_lo = 0.05;
  double noise_maf_hi = 0.5;
  std::uint64_t seed = 1;
  PureTableOptions table_options{};
  std::size_t max_candidates_per_sample = 1000;
};

/// Component sizes of the eight preset scenarios.
inline std::vector<std::size_t> scenario_component_sizes(int scenario) {
  switch (scenario) {
    case 1: return {1};
    case 2: return {1, 1, 1, 1, 1};
    case 3: return {2};
    case 4: return {2, 1, 1, 1};
    case 5: return {2, 2};
    case 6: return {2, 2, 2};
    case 7: return {2, 2, 2, 1, 1, 1};
    case 8: return {3, 1, 1, 1};
    default: throw ValidationError("scenario must be between 1 and 8");
  }
}

/// Parses "0.2,0.2;0.1;0.4": semicolons separate components, commas separate
/// the loci of one component.
inline std::vector<std::vector<double>> parse_maf_groups(const std::string& text) {
  std::vector<std::vector<double>> groups;
  std::stringstream outer(text);
  std::string group;
  while (std::getline(outer, group, ';')) {
    std::vector<double> mafs;
    std::stringstream inner(group);
    std::string item;
    while (std::getline(inner, item, ',')) {
      const auto t = detail::trim(item);
      if (t.empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(std::string(t), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != t.size()) throw ParseError("invalid MAF '" + std::string(t) + "'");
      mafs.push_back(v);
    }
    if (!mafs.empty()) groups.push_back(std::move(mafs));
  }
  if (groups.empty()) throw ParseError("no MAFs given");
  return groups;
}

/// Builds the component list of a preset scenario. Given MAF groups are used in
/// order; components beyond them reuse the first given group of the same size,
/// and single SNPs without one cycle through 0.1, 0.2, 0.4.
inline std::vector<ComponentSpec> scenario_components(int scenario,
                                                      const std::vector<std::vector<double>>& maf_groups,
                                                      double h2) {
  const auto sizes = scenario_component_sizes(scenario);
  std::vector<ComponentSpec> out;
  std::size_t singles_defaulted = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const std::vector<double>* chosen = nullptr;
    if (c < maf_groups.size() && maf_groups[c].size() == sizes[c]) chosen = &maf_groups[c];
    if (!chosen)
      for (const auto& g : maf_groups)
        if (g.size() == sizes[c]) {
          chosen = &g;
          break;
        }
    if (chosen) {
      out.push_back({*chosen, h2});
    } else if (sizes[c] == 1) {
      static constexpr double kDefaults[] = {0.1, 0.2, 0.4};
      out.push_back({{kDefaults[singles_defaulted++ % 3]}, h2});
    } else {
      throw ValidationError("scenario " + std::to_string(scenario) + " needs MAFs for a " +
                            std::to_string(sizes[c]) + "-SNP component");
    }
  }
  return out;
}

/// Scenario 0 takes every MAF group as its own component; 1..8 use the presets.
inline std::vector<ComponentSpec> components_for(int scenario, const std::vector<std::vector<double>>& maf_groups,
                                                 double h2) {
  if (scenario != 0) return scenario_components(scenario, maf_groups, h2);
  std::vector<ComponentSpec> out;
  for (const auto& g : maf_groups) out.push_back({g, h2});
  return out;
}

/// Everything drawn before sampling individuals: component tables, where the
/// component SNPs sit among the q columns, and the noise MAFs.
struct ScenarioModel {
  ScenarioSpec spec;
  std::vector<PenetranceTable> tables;
  std::vector<std::vector<std::size_t>> positions;  // per component, feature indices
  std::vector<double> mafs;                          // per feature
};

inline ScenarioModel realize_scenario(const ScenarioSpec& spec) {
  std::size_t used = 0;
  for (const auto& c : spec.components) {
    if (c.size() < 1 || c.size() > 3) throw ValidationError("components have 1 to 3 SNPs");
    used += c.size();
  }
  if (spec.q_total < used) throw ValidationError("q_total is smaller than the number of effect SNPs");
  if (spec.n < 2 || spec.n % 2 != 0) throw ValidationError("n must be a positive even number");
  if (!(spec.noise_maf_lo > 0.0 && spec.noise_maf_lo < spec.noise_maf_hi && spec.noise_maf_hi <= 0.5))
    throw ValidationError("noise MAF range must satisfy 0 < lo < hi <= 0.5");

  ScenarioModel model{spec, {}, {}, std::vector<double>(spec.q_total)};
  for (std::size_t c = 0; c < spec.components.size(); ++c) {
    const auto& comp = spec.components[c];
    if (comp.size() == 1) {
      model.tables.push_back(generate_main_effect_table(comp.mafs[0], comp.h2));
    } else {
      model.tables.push_back(generate_pure_epistasis_table(comp.mafs, comp.h2,
                                                           derive_seed(spec.seed, 100 + c),
                                                           spec.table_options));
    }
  }

  Rng rng(derive_seed(spec.seed, 1));
  std::vector<std::size_t> perm(spec.q_total);
  for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = j;
  shuffle(perm.begin(), perm.end(), rng);
  std::size_t next = 0;
  for (const auto& comp : spec.components) {
    std::vector<std::size_t> pos;
    for (std::size_t k = 0; k < comp.size(); ++k) {
      pos.push_back(perm[next]);
      model.mafs[perm[next]] = comp.mafs[k];
      ++next;
    }
    model.positions.push_back(std::move(pos));
  }
  for (; next < perm.size(); ++next)
    model.mafs[perm[next]] = uniform(rng, spec.noise_maf_lo, spec.noise_maf_hi);
  return model;
}

namespace detail {

inline double logit_or_inf(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return std::log(p / (1.0 - p));
}

}  // namespace detail

/// Aggregated case probability of one genotype vector.
inline double aggregate_penetrance(const ScenarioModel& model, const std::vector<Level>& genotypes) {
  if (model.tables.empty()) return 0.5;
  if (model.tables.size() == 1) {
    std::vector<int> g;
    for (auto j : model.positions[0]) g.push_back(genotypes[j]);
    return model.tables[0].at(g);
  }
  double eta = 0.0;
  for (std::size_t c = 0; c < model.tables.size(); ++c) {
    std::vector<int> g;
    for (auto j : model.positions[c]) g.push_back(genotypes[j]);
    eta += detail::logit_or_inf(model.tables[c].at(g));
  }
  if (std::isnan(eta)) return 0.5;
  if (std::isinf(eta)) return eta > 0 ? 1.0 : 0.0;
  return expit(eta);
}

inline std::string feature_name(std::size_t j) { return "SNP" + std::to_string(j + 1); }

/// Draws candidates (genotypes under HWE, then a Bernoulli phenotype) and keeps
/// them until n/2 cases and n/2 controls have been accepted.
inline GenotypeDataset simulate_dataset(const ScenarioModel& model) {
  const auto& spec = model.spec;
  const std::size_t q = spec.q_total, n = spec.n, half = n / 2;
  std::vector<GenotypeProbs> probs;
  for (double m : model.mafs) probs.push_back(hwe_probs(m));

  Rng rng(derive_seed(spec.seed, 2));
  std::vector<Level> flat(n * q);
  std::vector<std::uint8_t> pheno(n);
  std::vector<Level> g(q);
  std::size_t cases = 0, controls = 0, accepted = 0;
  const std::size_t budget = spec.max_candidates_per_sample * n;
  for (std::size_t drawn = 0; accepted < n; ++drawn) {
    if (drawn >= budget)
      throw InfeasibleError("simulation rejected " + std::to_string(budget) +
                            " candidates without balancing cases and controls");
    for (std::size_t j = 0; j < q; ++j) {
      const double u = uniform01(rng);
      g[j] = u < probs[j][0] ? 0 : (u < probs[j][0] + probs[j][1] ? 1 : 2);
    }
    const bool is_case = bernoulli(rng, aggregate_penetrance(model, g));
    if (is_case ? cases >= half : controls >= half) continue;
    (is_case ? cases : controls)++;
    pheno[accepted] = is_case ? 1 : 0;
    for (std::size_t j = 0; j < q; ++j) flat[j * n + accepted] = g[j];
    ++accepted;
  }
  std::vector<std::string> names(q), ids(n);
  for (std::size_t j = 0; j < q; ++j) names[j] = feature_name(j);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "S" + std::to_string(i + 1);
  return GenotypeDataset(std::move(names), std::vector<int>(q, 3), std::move(flat), std::move(pheno),
                         std::move(ids));
}

inline GenotypeDataset simulate_dataset(const ScenarioSpec& spec) {
  return simulate_dataset(realize_scenario(spec));
}

/// Provenance record written next to each simulated CSV.
inline nlohmann::json scenario_manifest(const ScenarioModel& model) {
  using nlohmann::json;
  const auto& spec = model.spec;
  json comps = json::array();
  for (std::size_t c = 0; c < spec.components.size(); ++c) {
    const auto& t = model.tables[c];
    json features = json::array();
    for (auto j : model.positions[c]) features.push_back(feature_name(j));
    comps.push_back({{"mafs", spec.components[c].mafs},
                     {"target_h2", spec.components[c].h2},
                     {"features", features},
                     {"penetrance", t.f},
                     {"K", t.K},
                     {"h2", t.h2}});
  }
  return {{"scenario", spec.scenario},
          {"n", spec.n},
          {"q", spec.q_total},
          {"seed", spec.seed},
          {"noise_maf_range", {spec.noise_maf_lo, spec.noise_maf_hi}},
          {"components", comps},
          {"feature_mafs", model.mafs}};
}

}  // namespace mbmdr
