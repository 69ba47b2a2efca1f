#pragma once

// Penetrance tables over diallelic loci, their logit-scale effect
// decomposition, and generators for the simulation components.
//
// A table over d loci stores 3^d penetrances in mixed-radix order with locus 0
// most significant, i.e. index = g_0 * 3^(d-1) + ... + g_{d-1}. Genotype 0 is
// the homozygote for the major allele and serves as the reference.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mbmdr/error.hpp"
#include "mbmdr/link.hpp"
#include "mbmdr/random.hpp"

namespace mbmdr {

using GenotypeProbs = std::array<double, 3>;

/// Hardy-Weinberg genotype frequencies for minor allele frequency `maf`.
inline GenotypeProbs hwe_probs(double maf) {
  if (!(maf > 0.0 && maf <= 0.5)) throw ContractError("hwe_probs: maf must lie in (0, 0.5]");
  return {(1.0 - maf) * (1.0 - maf), 2.0 * maf * (1.0 - maf), maf * maf};
}

inline std::size_t pow3(std::size_t d) {
  std::size_t r = 1;
  while (d--) r *= 3;
  return r;
}

/// Genotype vector of a flat table index.
inline std::vector<int> decode_genotypes(std::size_t index, std::size_t d) {
  std::vector<int> g(d);
  for (std::size_t k = d; k-- > 0;) {
    g[k] = static_cast<int>(index % 3);
    index /= 3;
  }
  return g;
}

inline std::size_t encode_genotypes(const std::vector<int>& g) {
  std::size_t idx = 0;
  for (int v : g) idx = idx * 3 + static_cast<std::size_t>(v);
  return idx;
}

/// Joint genotype probabilities of independent loci, in table order.
inline std::vector<double> joint_probs(const std::vector<GenotypeProbs>& probs) {
  std::vector<double> joint{1.0};
  for (const auto& p : probs) {
    std::vector<double> next;
    next.reserve(joint.size() * 3);
    for (double w : joint)
      for (double pk : p) next.push_back(w * pk);
    joint = std::move(next);
  }
  return joint;
}

inline double prevalence(const std::vector<double>& f, const std::vector<GenotypeProbs>& probs) {
  const auto joint = joint_probs(probs);
  if (joint.size() != f.size()) throw ContractError("prevalence: table size does not match loci");
  double k = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) k += joint[i] * f[i];
  return k;
}

inline double heritability(const std::vector<double>& f, const std::vector<GenotypeProbs>& probs) {
  const double k = prevalence(f, probs);
  if (!(k > 0.0 && k < 1.0)) throw ContractError("heritability undefined for prevalence 0 or 1");
  const auto joint = joint_probs(probs);
  double v = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) v += joint[i] * (f[i] - k) * (f[i] - k);
  return v / (k * (1.0 - k));
}

struct PenetranceTable {
  std::vector<double> mafs;                  // empty when probabilities were given directly
  std::vector<GenotypeProbs> genotype_probs;
  std::vector<double> f;
  double K = 0.0;
  double h2 = std::numeric_limits<double>::quiet_NaN();  // NaN when K is 0 or 1

  std::size_t d() const { return genotype_probs.size(); }
  double at(const std::vector<int>& g) const { return f[encode_genotypes(g)]; }
};

inline PenetranceTable make_penetrance_table(std::vector<GenotypeProbs> probs, std::vector<double> f,
                                             std::vector<double> mafs = {}) {
  if (f.size() != pow3(probs.size())) throw ContractError("penetrance table needs 3^d entries");
  for (double v : f)
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("penetrance outside [0,1]");
  for (const auto& p : probs)
    if (std::abs(p[0] + p[1] + p[2] - 1.0) > 1e-12) throw ContractError("genotype probabilities must sum to 1");
  PenetranceTable t{std::move(mafs), std::move(probs), std::move(f)};
  t.K = prevalence(t.f, t.genotype_probs);
  if (t.K > 0.0 && t.K < 1.0) t.h2 = heritability(t.f, t.genotype_probs);
  return t;
}

inline PenetranceTable make_hwe_table(const std::vector<double>& mafs, std::vector<double> f) {
  std::vector<GenotypeProbs> probs;
  for (double m : mafs) probs.push_back(hwe_probs(m));
  return make_penetrance_table(std::move(probs), std::move(f), mafs);
}

/// Averages locus `drop` out of the table, weighting by its genotype
/// probabilities. The remaining loci keep their probabilities.
inline PenetranceTable marginal_penetrance(const PenetranceTable& pt, std::size_t drop) {
  const std::size_t d = pt.d();
  if (drop >= d) throw ContractError("marginal_penetrance: locus index out of range");
  std::vector<GenotypeProbs> probs;
  std::vector<double> mafs;
  for (std::size_t k = 0; k < d; ++k) {
    if (k == drop) continue;
    probs.push_back(pt.genotype_probs[k]);
    if (!pt.mafs.empty()) mafs.push_back(pt.mafs[k]);
  }
  std::vector<double> f(pow3(d - 1), 0.0);
  for (std::size_t idx = 0; idx < pt.f.size(); ++idx) {
    auto g = decode_genotypes(idx, d);
    const double w = pt.genotype_probs[drop][g[drop]];
    g.erase(g.begin() + static_cast<std::ptrdiff_t>(drop));
    f[encode_genotypes(g)] += w * pt.f[idx];
  }
  return make_penetrance_table(std::move(probs), std::move(f), std::move(mafs));
}

/// Effects on the logit scale: logit f_g = beta0 + sum of effects[h] over all
/// non-reference patterns h contained in g. A pattern is a full-length
/// genotype vector; its zero entries mean "locus not involved". Patterns with
/// one non-zero entry are main effects, the rest are interaction terms.
struct EffectVector {
  double beta0 = 0.0;
  std::map<std::vector<int>, double> effects;
};

namespace detail {

// True when pattern h agrees with g on h's support.
inline bool contained_in(const std::vector<int>& h, const std::vector<int>& g) {
  for (std::size_t k = 0; k < h.size(); ++k)
    if (h[k] != 0 && h[k] != g[k]) return false;
  return true;
}

// Inclusion-exclusion over sub-patterns: effect_g = sum over h in g of
// (-1)^(|g| - |h|) value_h, where |.| counts non-reference loci.
inline EffectVector alternating_decomposition(const std::vector<double>& values, std::size_t d) {
  EffectVector ev;
  ev.beta0 = values[0];
  for (std::size_t idx = 1; idx < values.size(); ++idx) {
    const auto g = decode_genotypes(idx, d);
    const auto support = static_cast<int>(std::count_if(g.begin(), g.end(), [](int v) { return v != 0; }));
    double acc = 0.0;
    for (std::size_t hidx = 0; hidx < values.size(); ++hidx) {
      const auto h = decode_genotypes(hidx, d);
      if (!contained_in(h, g)) continue;
      const auto hs = static_cast<int>(std::count_if(h.begin(), h.end(), [](int v) { return v != 0; }));
      acc += ((support - hs) % 2 == 0 ? 1.0 : -1.0) * values[hidx];
    }
    ev.effects[g] = acc;
  }
  return ev;
}

}  // namespace detail

inline std::vector<double> effects_to_penetrance(const EffectVector& ev, std::size_t d) {
  if (!std::isfinite(ev.beta0)) throw ContractError("effects_to_penetrance: non-finite beta0");
  std::vector<double> f(pow3(d));
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto g = decode_genotypes(idx, d);
    double eta = ev.beta0;
    for (const auto& [h, value] : ev.effects) {
      if (h.size() != d) throw ContractError("effects_to_penetrance: pattern length differs from d");
      if (!std::isfinite(value)) throw ContractError("effects_to_penetrance: non-finite effect");
      bool any = false;
      for (int v : h) any |= v != 0;
      if (any && detail::contained_in(h, g)) eta += value;
    }
    f[idx] = expit(eta);
  }
  return f;
}

/// Logit-scale effects of a table; every penetrance must lie in (0,1).
inline EffectVector penetrance_to_effects(const std::vector<double>& f, std::size_t d) {
  if (f.size() != pow3(d)) throw ContractError("penetrance_to_effects: table needs 3^d entries");
  std::vector<double> logits(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] > 0.0 && f[i] < 1.0))
      throw ContractError("penetrance_to_effects: penetrance " + std::to_string(f[i]) +
                          " has no finite logit");
    logits[i] = logit(f[i]);
  }
  return detail::alternating_decomposition(logits, d);
}

/// Same decomposition on the penetrance scale itself; a non-zero interaction
/// term here alongside a zero logit-scale term is a scale effect.
inline EffectVector penetrance_scale_effects(const std::vector<double>& f, std::size_t d) {
  if (f.size() != pow3(d)) throw ContractError("penetrance_scale_effects: table needs 3^d entries");
  return detail::alternating_decomposition(f, d);
}

/// f_g = expit(beta0 + beta * g) with beta0 placing the prevalence at 0.5 and
/// beta found by bisection so that the heritability equals `target_h2`.
inline PenetranceTable generate_main_effect_table(double maf, double target_h2) {
  if (!(target_h2 > 0.0 && target_h2 < 1.0)) throw ContractError("target h2 must lie in (0,1)");
  const std::vector<GenotypeProbs> probs{hwe_probs(maf)};

  const auto table_for = [&](double beta) {
    // Prevalence is increasing in beta0; bracket is wide enough for |beta| <= 30.
    double lo = -100.0, hi = 100.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const std::vector<double> f{expit(mid), expit(mid + beta), expit(mid + 2 * beta)};
      (prevalence(f, probs) < 0.5 ? lo : hi) = mid;
    }
    const double b0 = 0.5 * (lo + hi);
    return std::vector<double>{expit(b0), expit(b0 + beta), expit(b0 + 2 * beta)};
  };

  constexpr double kMaxBeta = 30.0;
  if (heritability(table_for(kMaxBeta), probs) < target_h2)
    throw InfeasibleError("h2 = " + std::to_string(target_h2) + " is not reachable for maf " +
                          std::to_string(maf) + " (maximum " +
                          std::to_string(heritability(table_for(kMaxBeta), probs)) + ")");
  double lo = 0.0, hi = kMaxBeta;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (heritability(table_for(mid), probs) < target_h2 ? lo : hi) = mid;
  }
  return make_hwe_table({maf}, table_for(0.5 * (lo + hi)));
}

namespace detail {

// Orthogonal projection of every fibre along every axis onto {v : p.v = 0}.
// The axes act independently, so the result satisfies all constraints at once:
// marginalizing any locus out leaves exactly zero.
inline void project_zero_marginal(std::vector<double>& t, const std::vector<GenotypeProbs>& probs) {
  const std::size_t d = probs.size();
  for (std::size_t axis = 0; axis < d; ++axis) {
    const auto& p = probs[axis];
    const double pp = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    const std::size_t stride = pow3(d - 1 - axis);
    for (std::size_t base = 0; base < t.size(); ++base) {
      if ((base / stride) % 3 != 0) continue;
      const double dot = p[0] * t[base] + p[1] * t[base + stride] + p[2] * t[base + 2 * stride];
      for (int k = 0; k < 3; ++k) t[base + k * stride] -= p[k] * dot / pp;
    }
  }
}

// Heritability reachable by scaling deviations `t` around K = 0.5 until the
// largest one hits 0.5.
inline double achievable_h2(const std::vector<double>& t, const std::vector<double>& joint) {
  double var = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    var += joint[i] * t[i] * t[i];
    peak = std::max(peak, std::abs(t[i]));
  }
  return peak > 0.0 ? var / (peak * peak) : 0.0;
}

}  // namespace detail

struct PureTableOptions {
  int max_tries = 200;     // random restarts
  int climb_steps = 400;   // hill-climbing proposals per restart
};

/// Random penetrance table over 2 or 3 loci with prevalence 0.5, heritability
/// `target_h2` and no lower-order marginal effects.
///
/// Each restart draws a Gaussian deviation table, projects it onto the
/// zero-marginal subspace and hill-climbs the reachable heritability within
/// that subspace until it clears the target; the deviations are then scaled to
/// hit the target exactly. Fails with the best reachable value seen.
inline PenetranceTable generate_pure_epistasis_table(const std::vector<double>& mafs, double target_h2,
                                                     std::uint64_t seed,
                                                     const PureTableOptions& opts = {}) {
  const std::size_t d = mafs.size();
  if (d < 2 || d > 3) throw ContractError("pure epistasis tables need 2 or 3 loci");
  if (!(target_h2 > 0.0 && target_h2 < 1.0)) throw ContractError("target h2 must lie in (0,1)");
  std::vector<GenotypeProbs> probs;
  for (double m : mafs) probs.push_back(hwe_probs(m));
  const auto joint = joint_probs(probs);
  const std::size_t cells = joint.size();

  Rng rng(seed);
  const auto random_direction = [&] {
    std::vector<double> t(cells);
    for (auto& v : t) v = standard_normal(rng);
    detail::project_zero_marginal(t, probs);
    return t;
  };

  // Climb a little past the target so the final table is not pinned to 0/1.
  const double goal = std::min(target_h2 * 1.05, 1.0);
  double best_seen = 0.0;
  for (int attempt = 0; attempt < opts.max_tries; ++attempt) {
    auto t = random_direction();
    double reach = detail::achievable_h2(t, joint);
    double step = 0.3;
    for (int s = 0; s < opts.climb_steps && reach < goal; ++s) {
      double peak = 0.0;
      for (double v : t) peak = std::max(peak, std::abs(v));
      auto cand = random_direction();
      for (std::size_t i = 0; i < cells; ++i) cand[i] = t[i] + step * peak * cand[i];
      const double r = detail::achievable_h2(cand, joint);
      if (r > reach) {
        t = std::move(cand);
        reach = r;
        step *= 1.5;
      } else {
        step = std::max(step * 0.8, 1e-4);
      }
    }
    best_seen = std::max(best_seen, reach);
    if (reach < target_h2) continue;

    double var = 0.0;
    for (std::size_t i = 0; i < cells; ++i) var += joint[i] * t[i] * t[i];
    const double scale = std::sqrt(target_h2 * 0.25 / var);
    std::vector<double> f(cells);
    bool inside = true;
    for (std::size_t i = 0; i < cells; ++i) {
      f[i] = 0.5 + scale * t[i];
      inside &= f[i] >= 0.0 && f[i] <= 1.0;
    }
    if (!inside) continue;
    auto table = make_penetrance_table(probs, std::move(f), mafs);
    if (std::abs(table.K - 0.5) > 1e-9 || std::abs(table.h2 - target_h2) > 1e-6) continue;
    return table;
  }
  throw InfeasibleError("no pure epistasis table with h2 = " + std::to_string(target_h2) +
                        " found in " + std::to_string(opts.max_tries) +
                        " tries; largest achievable h2 seen: " + std::to_string(best_seen));
}

}  // namespace mbmdr
