#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ntal/error.hpp"
#include "ntal/rng.hpp"

namespace ntal {

using ClassIndex = std::size_t;

class FeatureSchema {
 public:
  FeatureSchema() = default;

  FeatureSchema(std::vector<std::string> feature_names, std::vector<std::string> class_names)
      : feature_names_(std::move(feature_names)), class_names_(std::move(class_names)) {
    if (feature_names_.empty())
      throw Error(Errc::invalid_schema, "schema needs at least one feature");
    if (class_names_.size() < 2)
      throw Error(Errc::insufficient_classes,
                  "schema needs at least two classes, got " + std::to_string(class_names_.size()));
    require_unique(feature_names_, "feature");
    require_unique(class_names_, "class");
  }

  std::size_t n_features() const noexcept { return feature_names_.size(); }
  std::size_t n_classes() const noexcept { return class_names_.size(); }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  bool operator==(const FeatureSchema&) const = default;

 private:
  static void require_unique(const std::vector<std::string>& names, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second)
        throw Error(Errc::invalid_schema, std::string("duplicate ") + what + " name '" + n + "'");
  }

  std::vector<std::string> feature_names_;
  std::vector<std::string> class_names_;
};

struct FlowRecord {
  std::vector<double> features;
  ClassIndex label = 0;

  bool operator==(const FlowRecord&) const = default;
};

/// Immutable schema plus records. Construction validates every record.
class Dataset {
 public:
  Dataset() = default;

  Dataset(FeatureSchema schema, std::vector<FlowRecord> records)
      : schema_(std::move(schema)), records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) check_record(records_[i], i);
  }

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<FlowRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const FlowRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t n_features() const noexcept { return schema_.n_features(); }
  std::size_t n_classes() const noexcept { return schema_.n_classes(); }

  Dataset select(std::span<const std::size_t> indices) const {
    std::vector<FlowRecord> out;
    out.reserve(indices.size());
    for (auto i : indices) {
      if (i >= records_.size())
        throw Error(Errc::index_out_of_range, "record index " + std::to_string(i));
      out.push_back(records_[i]);
    }
    Dataset d;
    d.schema_ = schema_;
    d.records_ = std::move(out);
    return d;
  }

  bool operator==(const Dataset&) const = default;

 private:
  void check_record(const FlowRecord& r, std::size_t i) const {
    if (r.features.size() != schema_.n_features())
      throw Error(Errc::dimension_mismatch, "record " + std::to_string(i) + " has " +
                                                std::to_string(r.features.size()) +
                                                " features, schema has " +
                                                std::to_string(schema_.n_features()));
    if (r.label >= schema_.n_classes())
      throw Error(Errc::class_out_of_range, "record " + std::to_string(i) + " label " +
                                                std::to_string(r.label));
    for (double v : r.features)
      if (!std::isfinite(v))
        throw Error(Errc::non_numeric_value, "record " + std::to_string(i) + " has a non-finite feature");
  }

  FeatureSchema schema_;
  std::vector<FlowRecord> records_;
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvConfig {
  std::string label_column = "label";
  /// Feature columns to keep, in this order. Empty keeps every non-label column.
  std::vector<std::string> features;
  /// Reject a file with a header and no data rows.
  bool strict = true;
  /// Pre-declared class order. Empty assigns indices by first appearance.
  std::vector<std::string> class_names;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    else if (line[i] == ',' && !quoted) {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(line.substr(start)));
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses a flow CSV. Error messages use 1-based file line numbers (the
/// header is line 1).
inline Dataset parse_csv(std::istream& in, const CsvConfig& config = {}) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::empty_dataset, "missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> header;
  for (auto f : detail::split_csv(line)) header.emplace_back(f);

  auto column_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::missing_column, "column '" + name + "' not in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_col = column_of(config.label_column);
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (config.features.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != label_col) {
        feature_cols.push_back(c);
        feature_names.push_back(header[c]);
      }
  } else {
    for (const auto& name : config.features) {
      const auto c = column_of(name);
      if (c == label_col)
        throw Error(Errc::invalid_schema, "label column '" + name + "' listed as feature");
      feature_cols.push_back(c);
      feature_names.push_back(name);
    }
  }

  std::vector<std::string> class_names = config.class_names;
  std::unordered_map<std::string, ClassIndex> class_index;
  for (std::size_t i = 0; i < class_names.size(); ++i) class_index.emplace(class_names[i], i);
  const bool declared = !class_names.empty();

  std::vector<FlowRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != header.size())
      throw Error(Errc::dimension_mismatch, "row " + std::to_string(line_no) + " has " +
                                                std::to_string(fields.size()) + " fields, header has " +
                                                std::to_string(header.size()));
    FlowRecord rec;
    rec.features.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto v = detail::parse_real(fields[feature_cols[k]]);
      if (!v)
        throw Error(Errc::non_numeric_value, "row " + std::to_string(line_no) + ", column '" +
                                                 feature_names[k] + "': '" +
                                                 std::string(fields[feature_cols[k]]) + "'");
      rec.features.push_back(*v);
    }
    std::string label(fields[label_col]);
    if (label.empty())
      throw Error(Errc::non_numeric_value, "row " + std::to_string(line_no) + ": missing label");
    auto it = class_index.find(label);
    if (it == class_index.end()) {
      if (declared)
        throw Error(Errc::unknown_label, "row " + std::to_string(line_no) + ": label '" + label + "'");
      it = class_index.emplace(label, class_names.size()).first;
      class_names.push_back(label);
    }
    rec.label = it->second;
    records.push_back(std::move(rec));
  }

  if (records.empty() && config.strict) throw Error(Errc::empty_dataset, "no data rows");
  return Dataset(FeatureSchema(std::move(feature_names), std::move(class_names)), std::move(records));
}

inline Dataset load_csv(const std::string& path, const CsvConfig& config = {}) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return parse_csv(in, config);
}

/// Writes features at round-trip precision with the class name in a trailing
/// `label` column.
inline void write_csv(std::ostream& out, const Dataset& data) {
  const auto& schema = data.schema();
  for (const auto& name : schema.feature_names()) out << name << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (const auto& r : data.records()) {
    for (double v : r.features) out << v << ',';
    out << schema.class_names()[r.label] << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  write_csv(out, data);
  if (!out) throw Error(Errc::io_error, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Shuffling and subsets

/// round-half-up(fraction * n)
inline std::size_t subset_size(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

struct SubsetSplit {
  Dataset subset;
  Dataset remainder;
};

inline SubsetSplit shuffle_and_subset(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error(Errc::invalid_fraction, "fraction must lie in (0, 1], got " + std::to_string(fraction));
  const auto perm = permutation(data.size(), seed);
  const auto k = std::min(subset_size(fraction, data.size()), data.size());
  const std::span<const std::size_t> all(perm);
  return {data.select(all.first(k)), data.select(all.subspan(k))};
}

// ---------------------------------------------------------------------------
// Synthetic flows

struct DriftSpec {
  std::size_t onset_index = 0;
  /// One entry broadcasts to every feature; otherwise one entry per feature.
  std::vector<double> mean_shift;
};

struct SyntheticSpec {
  std::size_t n_classes = 2;
  std::size_t per_class = 100;
  std::size_t n_features = 4;
  double class_mean_separation = 6.0;
  double noise_stddev = 1.0;
  std::optional<DriftSpec> drift;
  std::uint64_t seed = 0;
};

/// Class means sit on the corners of a lattice: with the smallest base b >= 2
/// such that b^n_features >= n_classes, coordinate j of class c's mean is
/// separation * (j-th base-b digit of c). Distinct classes differ in at least
/// one coordinate by `separation`.
inline std::vector<std::vector<double>> synthetic_class_means(std::size_t n_classes, std::size_t n_features,
                                                              double separation) {
  std::size_t base = 2;
  auto capacity = [&](std::size_t b) {
    std::size_t cap = 1;
    for (std::size_t j = 0; j < n_features && cap < n_classes; ++j) cap *= b;
    return cap;
  };
  while (capacity(base) < n_classes) ++base;
  std::vector<std::vector<double>> means(n_classes, std::vector<double>(n_features, 0.0));
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t rest = c;
    for (std::size_t j = 0; j < n_features && rest > 0; ++j) {
      means[c][j] = separation * static_cast<double>(rest % base);
      rest /= base;
    }
  }
  return means;
}

/// Gaussian blobs in shuffled stream order. With drift, records at stream
/// position >= onset_index draw from shifted means.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes < 2 || spec.per_class < 1 || spec.n_features < 1 || !(spec.noise_stddev >= 0.0) ||
      !std::isfinite(spec.class_mean_separation))
    throw Error(Errc::invalid_spec, "synthetic spec needs n_classes >= 2, per_class >= 1, "
                                    "n_features >= 1, noise_stddev >= 0");
  const std::size_t total = spec.n_classes * spec.per_class;
  std::vector<double> shift;
  if (spec.drift) {
    if (spec.drift->onset_index > total)
      throw Error(Errc::invalid_spec, "drift onset beyond record count");
    const auto& s = spec.drift->mean_shift;
    if (s.size() == 1) shift.assign(spec.n_features, s.front());
    else if (s.size() == spec.n_features) shift = s;
    else throw Error(Errc::invalid_spec, "drift mean_shift must have 1 or n_features entries");
  }

  std::vector<std::string> features, classes;
  for (std::size_t j = 0; j < spec.n_features; ++j) features.push_back("f" + std::to_string(j));
  for (std::size_t c = 0; c < spec.n_classes; ++c) classes.push_back("class" + std::to_string(c));

  const auto means = synthetic_class_means(spec.n_classes, spec.n_features, spec.class_mean_separation);
  const auto order = permutation(total, derive_seed(spec.seed, 0));
  Rng noise(derive_seed(spec.seed, 1));

  std::vector<FlowRecord> records(total);
  for (std::size_t pos = 0; pos < total; ++pos) {
    const ClassIndex label = order[pos] % spec.n_classes;
    const bool drifted = spec.drift && pos >= spec.drift->onset_index;
    auto& rec = records[pos];
    rec.label = label;
    rec.features.resize(spec.n_features);
    for (std::size_t j = 0; j < spec.n_features; ++j) {
      double mu = means[label][j] + (drifted ? shift[j] : 0.0);
      rec.features[j] = mu + spec.noise_stddev * standard_normal(noise);
    }
  }
  return Dataset(FeatureSchema(std::move(features), std::move(classes)), std::move(records));
}

// ---------------------------------------------------------------------------
// Standardization

/// Per-feature z-score parameters (population variance).
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != mean.size())
      throw Error(Errc::schema_mismatch, "expected " + std::to_string(mean.size()) + " features, got " +
                                             std::to_string(x.size()));
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      out[j] = stddev[j] > 0.0 ? (x[j] - mean[j]) / stddev[j] : 0.0;
    return out;
  }

  Dataset apply(const Dataset& data) const {
    if (data.n_features() != mean.size())
      throw Error(Errc::schema_mismatch, "expected " + std::to_string(mean.size()) + " features, got " +
                                             std::to_string(data.n_features()));
    std::vector<FlowRecord> out;
    out.reserve(data.size());
    for (const auto& r : data.records()) out.push_back({apply(r.features), r.label});
    return Dataset(data.schema(), std::move(out));
  }
};

inline Scaler fit_scaler(std::span<const FlowRecord* const> rows, std::size_t n_features) {
  if (rows.empty()) throw Error(Errc::empty_dataset, "cannot standardize an empty dataset");
  Scaler s;
  s.mean.assign(n_features, 0.0);
  s.stddev.assign(n_features, 0.0);
  const double n = static_cast<double>(rows.size());
  for (const auto* r : rows)
    for (std::size_t j = 0; j < n_features; ++j) s.mean[j] += r->features[j];
  for (auto& m : s.mean) m /= n;
  for (const auto* r : rows)
    for (std::size_t j = 0; j < n_features; ++j) {
      const double d = r->features[j] - s.mean[j];
      s.stddev[j] += d * d;
    }
  for (std::size_t j = 0; j < n_features; ++j) {
    s.stddev[j] = std::sqrt(s.stddev[j] / n);
    // Relative cutoff: a column that is constant up to rounding is constant.
    if (s.stddev[j] <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) s.stddev[j] = 0.0;
  }
  return s;
}

inline Scaler standardize(const Dataset& train) {
  std::vector<const FlowRecord*> rows;
  rows.reserve(train.size());
  for (const auto& r : train.records()) rows.push_back(&r);
  return fit_scaler(rows, train.n_features());
}

}  // namespace ntal
