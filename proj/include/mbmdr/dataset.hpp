#pragma once

// Genotype matrix + binary phenotype, CSV/TSV ingestion and stratified folds.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mbmdr/error.hpp"
#include "mbmdr/random.hpp"

namespace mbmdr {

using Level = std::uint8_t;

// Sentinel for a missing genotype. Level counts are therefore capped at 255.
inline constexpr Level kMissing = 255;
inline constexpr int kMaxLevels = 255;

/// Immutable n x q matrix of discrete feature levels with a binary phenotype.
///
/// Genotypes are stored feature-major so that scanning one feature across all
/// samples is a contiguous read.
class GenotypeDataset {
 public:
  GenotypeDataset() = default;

  /// `genotypes` is feature-major: genotypes[j * n + i] is sample i, feature j.
  GenotypeDataset(std::vector<std::string> feature_names, std::vector<int> levels,
                  std::vector<Level> genotypes, std::vector<std::uint8_t> phenotype,
                  std::vector<std::string> sample_ids)
      : feature_names_(std::move(feature_names)),
        levels_(std::move(levels)),
        genotypes_(std::move(genotypes)),
        phenotype_(std::move(phenotype)),
        sample_ids_(std::move(sample_ids)) {
    validate();
  }

  std::size_t n() const { return phenotype_.size(); }
  std::size_t q() const { return feature_names_.size(); }

  int levels(std::size_t j) const { return levels_[j]; }
  std::span<const int> levels() const { return levels_; }

  std::span<const Level> column(std::size_t j) const {
    return {genotypes_.data() + j * n(), n()};
  }
  Level at(std::size_t i, std::size_t j) const { return genotypes_[j * n() + i]; }

  std::span<const std::uint8_t> phenotype() const { return phenotype_; }
  std::span<const std::string> feature_names() const { return feature_names_; }
  std::span<const std::string> sample_ids() const { return sample_ids_; }

  std::size_t case_count() const {
    return static_cast<std::size_t>(std::count(phenotype_.begin(), phenotype_.end(), 1));
  }
  double case_fraction() const { return static_cast<double>(case_count()) / n(); }

  /// Row i as a feature vector (length q).
  std::vector<Level> row(std::size_t i) const {
    std::vector<Level> x(q());
    for (std::size_t j = 0; j < q(); ++j) x[j] = at(i, j);
    return x;
  }

  /// Rows selected by index, in the given order. Level counts are inherited so
  /// that folds of one dataset share a cell geometry.
  GenotypeDataset subset(std::span<const std::size_t> rows) const {
    std::vector<Level> g(rows.size() * q());
    std::vector<std::uint8_t> y(rows.size());
    std::vector<std::string> ids(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      if (i >= n()) throw ContractError("subset: row index out of range");
      y[r] = phenotype_[i];
      ids[r] = sample_ids_[i];
      for (std::size_t j = 0; j < q(); ++j) g[j * rows.size() + r] = at(i, j);
    }
    return GenotypeDataset(feature_names_, levels_, std::move(g), std::move(y), std::move(ids));
  }

  /// Same data with cases and controls swapped.
  GenotypeDataset with_flipped_phenotype() const {
    GenotypeDataset out = *this;
    for (auto& v : out.phenotype_) v = static_cast<std::uint8_t>(1 - v);
    return out;
  }

 private:
  void validate() const {
    if (phenotype_.empty() || feature_names_.empty())
      throw ValidationError("empty dataset: need at least one sample and one feature");
    if (levels_.size() != q()) throw ContractError("levels size does not match feature count");
    if (genotypes_.size() != n() * q()) throw ContractError("genotype matrix has wrong size");
    if (sample_ids_.size() != n()) throw ContractError("sample id count does not match n");
    for (std::size_t i = 0; i < n(); ++i) {
      if (phenotype_[i] > 1)
        throw ValidationError("sample '" + sample_ids_[i] + "': phenotype must be 0 or 1");
    }
    const auto cases = case_count();
    if (cases == 0 || cases == n())
      throw ValidationError("phenotype needs at least one case and one control");
    for (std::size_t j = 0; j < q(); ++j) {
      if (levels_[j] < 2 || levels_[j] > kMaxLevels)
        throw ValidationError("feature '" + feature_names_[j] + "': level count must be in [2,255]");
      for (Level v : column(j)) {
        if (v != kMissing && v >= levels_[j])
          throw ValidationError("feature '" + feature_names_[j] + "': level " +
                                std::to_string(v) + " out of range");
      }
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& name : feature_names_)
      if (!seen.insert(name).second) throw ValidationError("duplicate feature name '" + name + "'");
    seen.clear();
    for (const auto& id : sample_ids_)
      if (!seen.insert(id).second) throw ValidationError("duplicate sample id '" + id + "'");
  }

  std::vector<std::string> feature_names_;
  std::vector<int> levels_;
  std::vector<Level> genotypes_;
  std::vector<std::uint8_t> phenotype_;
  std::vector<std::string> sample_ids_;
};

enum class TableFormat { kCsv, kTsv };

struct LoadOptions {
  std::optional<TableFormat> format;  // inferred from the extension when empty
  std::string pheno_col = "PHENOTYPE";
  std::string id_col = "sample_id";   // used only if the header contains it
  std::optional<int> levels;          // overrides inferred max+1 for every feature
};

namespace detail {

inline std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<int> parse_uint(std::string_view s) {
  if (s.empty() || s.size() > 6) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

inline char delimiter(TableFormat f) { return f == TableFormat::kTsv ? '\t' : ','; }

}  // namespace detail

/// Parsed genotype table before dataset validation. The phenotype is optional
/// so that unlabeled files can still be scored.
struct GenotypeTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> sample_ids;
  std::vector<std::vector<Level>> columns;  // per feature
  std::optional<std::vector<std::uint8_t>> phenotype;

  std::size_t n() const { return sample_ids.size(); }
  std::size_t q() const { return feature_names.size(); }
};

/// Parses a delimited genotype table. Line numbers in errors are 1-based and
/// count the header.
inline GenotypeTable read_genotype_table(std::istream& in, const LoadOptions& opts = {},
                                         bool require_phenotype = true) {
  const char delim = detail::delimiter(opts.format.value_or(TableFormat::kCsv));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty input: header row missing");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
    line.erase(0, 3);

  std::vector<std::string> header;
  for (auto f : detail::split_line(line, delim)) header.emplace_back(detail::trim(f));

  std::optional<std::size_t> pheno_idx, id_idx;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == opts.pheno_col) {
      pheno_idx = c;
    } else if (!opts.id_col.empty() && header[c] == opts.id_col) {
      id_idx = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (!pheno_idx && require_phenotype)
    throw ValidationError("phenotype column '" + opts.pheno_col + "' not found in header");

  GenotypeTable table;
  for (auto c : feature_cols) table.feature_names.push_back(header[c]);
  const std::size_t q = table.feature_names.size();
  table.columns.resize(q);
  if (pheno_idx) table.phenotype.emplace();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_line(line, delim);
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    if (pheno_idx) {
      const auto ptxt = detail::trim(fields[*pheno_idx]);
      const auto pv = detail::parse_uint(ptxt);
      if (!pv || *pv > 1)
        throw ValidationError("line " + std::to_string(line_no) + ": phenotype '" +
                              std::string(ptxt) + "' is not 0 or 1");
      table.phenotype->push_back(static_cast<std::uint8_t>(*pv));
    }
    table.sample_ids.emplace_back(id_idx ? std::string(detail::trim(fields[*id_idx]))
                                         : std::to_string(table.sample_ids.size() + 1));
    for (std::size_t j = 0; j < q; ++j) {
      const auto cell = detail::trim(fields[feature_cols[j]]);
      if (cell == "NA") {
        table.columns[j].push_back(kMissing);
        continue;
      }
      const auto v = detail::parse_uint(cell);
      if (!v || *v >= kMaxLevels)
        throw ParseError("line " + std::to_string(line_no) + ", column '" + table.feature_names[j] +
                         "': invalid genotype '" + std::string(cell) + "'");
      table.columns[j].push_back(static_cast<Level>(*v));
    }
  }
  if (table.n() == 0 || q == 0)
    throw ValidationError("empty dataset: need at least one sample and one feature");
  return table;
}

/// Validates a parsed table into a dataset; level counts are max+1 (at least
/// 2) unless `levels` overrides them.
inline GenotypeDataset to_dataset(GenotypeTable table, std::optional<int> levels_override = {}) {
  if (!table.phenotype) throw ValidationError("dataset needs a phenotype column");
  const std::size_t q = table.q();
  std::vector<int> levels(q);
  std::vector<Level> flat;
  flat.reserve(table.n() * q);
  for (std::size_t j = 0; j < q; ++j) {
    int max_level = 0;
    for (Level v : table.columns[j])
      if (v != kMissing) max_level = std::max(max_level, int{v});
    if (levels_override) {
      if (max_level >= *levels_override)
        throw ValidationError("feature '" + table.feature_names[j] + "': observed level " +
                              std::to_string(max_level) + " exceeds the level override " +
                              std::to_string(*levels_override));
      levels[j] = *levels_override;
    } else {
      levels[j] = std::max(2, max_level + 1);
    }
    flat.insert(flat.end(), table.columns[j].begin(), table.columns[j].end());
  }
  return GenotypeDataset(std::move(table.feature_names), std::move(levels), std::move(flat),
                         std::move(*table.phenotype), std::move(table.sample_ids));
}

inline GenotypeDataset read_dataset(std::istream& in, const LoadOptions& opts = {}) {
  return to_dataset(read_genotype_table(in, opts, true), opts.levels);
}

inline TableFormat format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".tsv" || ext == ".txt") ? TableFormat::kTsv : TableFormat::kCsv;
}

inline GenotypeTable load_genotype_table(const std::filesystem::path& path, LoadOptions opts = {},
                                         bool require_phenotype = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  if (!opts.format) opts.format = format_for(path);
  return read_genotype_table(in, opts, require_phenotype);
}

inline GenotypeDataset load_dataset(const std::filesystem::path& path, LoadOptions opts = {}) {
  return to_dataset(load_genotype_table(path, opts, true), opts.levels);
}

/// Writes `sample_id`, the phenotype column, then features in dataset order.
inline void write_dataset(std::ostream& out, const GenotypeDataset& ds,
                          TableFormat format = TableFormat::kCsv,
                          const std::string& pheno_col = "PHENOTYPE") {
  const char d = detail::delimiter(format);
  out << "sample_id" << d << pheno_col;
  for (const auto& name : ds.feature_names()) out << d << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << ds.sample_ids()[i] << d << int{ds.phenotype()[i]};
    for (std::size_t j = 0; j < ds.q(); ++j) {
      const Level v = ds.at(i, j);
      out << d;
      if (v == kMissing) {
        out << "NA";
      } else {
        out << int{v};
      }
    }
    out << '\n';
  }
}

inline void save_dataset(const std::filesystem::path& path, const GenotypeDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_dataset(out, ds, format_for(path));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

struct FoldAssignment {
  int k = 0;
  std::vector<int> assignment;  // fold index per sample
  std::uint64_t seed = 0;

  std::vector<std::size_t> members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> complement(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != fold) out.push_back(i);
    return out;
  }
};

/// Cases and controls are shuffled separately and dealt round-robin, so every
/// fold holds floor or ceil of (#class / k) samples of each class.
inline FoldAssignment stratified_kfold(const GenotypeDataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw ContractError("stratified_kfold: k must be at least 2");
  std::vector<std::size_t> cases, controls;
  for (std::size_t i = 0; i < ds.n(); ++i) (ds.phenotype()[i] ? cases : controls).push_back(i);
  if (cases.size() < static_cast<std::size_t>(k) || controls.size() < static_cast<std::size_t>(k))
    throw InfeasibleError("stratified_kfold: " + std::to_string(cases.size()) + " cases and " +
                          std::to_string(controls.size()) + " controls cannot fill " +
                          std::to_string(k) + " folds");
  Rng rng(seed);
  shuffle(cases.begin(), cases.end(), rng);
  shuffle(controls.begin(), controls.end(), rng);

  FoldAssignment fa{k, std::vector<int>(ds.n(), -1), seed};
  std::size_t dealt = 0;
  for (auto i : cases) fa.assignment[i] = static_cast<int>(dealt++ % k);
  for (auto i : controls) fa.assignment[i] = static_cast<int>(dealt++ % k);
  return fa;
}

}  // namespace mbmdr
