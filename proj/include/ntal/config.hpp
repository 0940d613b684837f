#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <type_traits>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ntal/dataset.hpp"
#include "ntal/engine.hpp"
#include "ntal/error.hpp"
#include "ntal/forest.hpp"
#include "ntal/strategies.hpp"

namespace ntal {

enum class ReportFormat { csv, json, md };

constexpr std::string_view to_string(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
    case ReportFormat::md: return "md";
  }
  return "csv";
}

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  if (s == "md") return ReportFormat::md;
  throw Error(Errc::config_error, "unknown report format '" + std::string(s) + "' (csv, json, md)");
}

struct DatasetSource {
  std::optional<std::string> csv_path;
  CsvConfig csv;
  SyntheticSpec synthetic;
};

struct StreamSettings {
  StreamConfig loop;
  /// Label budget as a fraction of the stream; used unless `budget` is set.
  double budget_fraction = 0.15;
  std::optional<std::size_t> budget;
};

struct ExperimentConfig {
  DatasetSource source;
  double test_fraction = 0.3;
  std::vector<StrategyConfig> strategies;
  ForestParams learner;
  std::vector<double> fractions{0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64};
  bool include_full_baseline = true;
  std::vector<std::uint64_t> seeds{0};
  StoppingCriteria stop;
  /// Fixed query batch; empty means auto (remaining budget / auto_iterations).
  std::optional<std::size_t> batch{10};
  std::size_t auto_iterations = 10;
  /// Share of each label budget drawn at random as the initial labeled set.
  double seed_share = 0.2;
  double noise_rate = 0.0;
  std::string output_path;
  ReportFormat output_format = ReportFormat::csv;
  StreamSettings stream;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(Errc::config_error, m); };
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test_fraction must lie in (0, 1)");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
      if (!(fractions[i] > 0.0 && fractions[i] < 1.0)) fail("fractions must lie in (0, 1)");
      if (i > 0 && !(fractions[i] > fractions[i - 1])) fail("fractions must be strictly increasing");
    }
    if (seeds.empty()) fail("seeds must not be empty");
    if (batch && *batch < 1) fail("batch must be >= 1");
    if (auto_iterations < 1) fail("auto_iterations must be >= 1");
    if (!(seed_share > 0.0 && seed_share <= 1.0)) fail("seed_share must lie in (0, 1]");
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) fail("oracle.noise_rate must lie in [0, 1]");
    if (!(stream.budget_fraction >= 0.0 && stream.budget_fraction <= 1.0))
      fail("stream.budget_fraction must lie in [0, 1]");
    try {
      learner.validate();
      stop.validate();
      stream.loop.validate();
      for (const auto& s : strategies) s.validate();
    } catch (const Error& e) {
      fail(e.what());
    }
  }
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim_copy(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class KeyValues {
 public:
  explicit KeyValues(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    auto v = it->second;
    kv_.erase(it);
    return v;
  }

  template <class T>
  void number(const std::string& key, T& out) {
    if (auto v = take(key)) out = parse<T>(key, *v);
  }
  template <class T>
  void number(const std::string& key, std::optional<T>& out) {
    if (auto v = take(key)) out = parse<T>(key, *v);
  }
  void flag(const std::string& key, bool& out) {
    if (auto v = take(key)) {
      if (*v == "true" || *v == "1" || *v == "yes") out = true;
      else if (*v == "false" || *v == "0" || *v == "no") out = false;
      else throw Error(Errc::config_error, key + ": expected true/false, got '" + *v + "'");
    }
  }
  template <class T>
  void list(const std::string& key, std::vector<T>& out) {
    if (auto v = take(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(parse<T>(key, item));
    }
  }

  void require_consumed() const {
    if (!kv_.empty()) throw Error(Errc::config_error, "unknown config key '" + kv_.begin()->first + "'");
  }

  template <class T>
  static T parse(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if constexpr (std::is_floating_point_v<T>) {
      const auto [p, ec] = std::from_chars(first, last, out);
      if (ec == std::errc{} && p == last && std::isfinite(out)) return out;
    } else {
      if (!value.empty() && value.front() != '-') {
        const auto [p, ec] = std::from_chars(first, last, out);
        if (ec == std::errc{} && p == last) return out;
      }
    }
    throw Error(Errc::config_error, key + ": invalid number '" + value + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
};

inline StrategyKind strategy_kind_or_throw(const std::string& key, const std::string& name) {
  if (auto k = parse_strategy_kind(name)) return *k;
  throw Error(Errc::config_error, key + ": unknown strategy '" + name + "'");
}

}  // namespace detail

/// Flat `key = value` lines; `#` starts a comment. Every key must be known
/// and every value valid, otherwise a ConfigError names the offending key.
inline ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim_copy(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::config_error, "line " + std::to_string(line_no) + ": expected key = value");
    auto key = detail::trim_copy(std::string_view(body).substr(0, eq));
    auto value = detail::trim_copy(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw Error(Errc::config_error, "line " + std::to_string(line_no) + ": empty key");
    if (!raw.emplace(key, value).second)
      throw Error(Errc::config_error, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }

  detail::KeyValues kv(std::move(raw));
  ExperimentConfig cfg;

  // dataset
  const auto source = kv.take("dataset.source").value_or("synthetic");
  if (source == "csv") {
    cfg.source.csv_path = kv.take("dataset.path");
    if (!cfg.source.csv_path) throw Error(Errc::config_error, "dataset.path is required for a csv source");
  } else if (source != "synthetic") {
    throw Error(Errc::config_error, "dataset.source must be synthetic or csv");
  }
  if (auto v = kv.take("dataset.label_column")) cfg.source.csv.label_column = *v;
  if (auto v = kv.take("dataset.features")) cfg.source.csv.features = detail::split_list(*v);
  if (auto v = kv.take("dataset.classes")) cfg.source.csv.class_names = detail::split_list(*v);
  kv.flag("dataset.strict", cfg.source.csv.strict);

  auto& syn = cfg.source.synthetic;
  syn = SyntheticSpec{};
  syn.n_classes = 3;
  syn.per_class = 200;
  syn.n_features = 6;
  kv.number("synthetic.n_classes", syn.n_classes);
  kv.number("synthetic.per_class", syn.per_class);
  kv.number("synthetic.n_features", syn.n_features);
  kv.number("synthetic.separation", syn.class_mean_separation);
  kv.number("synthetic.noise", syn.noise_stddev);
  kv.number("synthetic.seed", syn.seed);
  std::optional<std::size_t> onset;
  kv.number("synthetic.drift_onset", onset);
  std::vector<double> shift;
  kv.list("synthetic.drift_shift", shift);
  if (onset || !shift.empty()) {
    if (!onset || shift.empty())
      throw Error(Errc::config_error, "synthetic.drift_onset and synthetic.drift_shift go together");
    syn.drift = DriftSpec{*onset, shift};
  }

  kv.number("test_fraction", cfg.test_fraction);

  // strategies and their shared parameters
  StrategyConfig proto;
  if (auto v = kv.take("density.base")) proto.base_informativeness = detail::strategy_kind_or_throw("density.base", *v);
  kv.number("density.beta", proto.beta);
  if (auto v = kv.take("density.similarity")) {
    if (*v == "cosine") proto.similarity = Similarity::cosine;
    else if (*v == "rbf") proto.similarity = Similarity::rbf;
    else throw Error(Errc::config_error, "density.similarity must be cosine or rbf");
  }
  kv.number("density.rbf_gamma", proto.rbf_gamma);
  kv.number("qbc.committee_size", proto.committee_size);
  kv.number("lal.mc_rounds", proto.lal_params.mc_rounds);
  kv.number("lal.candidates_per_round", proto.lal_params.candidates_per_round);
  kv.number("lal.regressor_trees", proto.lal_params.regressor.n_trees);
  kv.number("lal.simulation_trees", proto.lal_params.simulation.n_trees);
  kv.number("lal.seed", proto.lal_params.seed);
  kv.number("strategy.seed", proto.seed);
  std::vector<std::string> names{"entropy", "random"};
  if (auto v = kv.take("strategies")) names = detail::split_list(*v);
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw Error(Errc::config_error, "strategies: duplicate '" + n + "'");
    auto s = proto;
    s.kind = detail::strategy_kind_or_throw("strategies", n);
    cfg.strategies.push_back(s);
  }

  // learner
  kv.number("forest.n_trees", cfg.learner.n_trees);
  if (auto v = kv.take("forest.max_depth")) {
    if (*v == "none" || *v == "0") cfg.learner.max_depth.reset();
    else cfg.learner.max_depth = detail::KeyValues::parse<std::size_t>("forest.max_depth", *v);
  }
  kv.number("forest.min_samples_split", cfg.learner.min_samples_split);
  if (auto v = kv.take("forest.features_per_split")) {
    if (*v == "sqrt") cfg.learner.features_per_split.reset();
    else cfg.learner.features_per_split = detail::KeyValues::parse<std::size_t>("forest.features_per_split", *v);
  }
  kv.flag("forest.bootstrap", cfg.learner.bootstrap);

  // protocol
  kv.list("fractions", cfg.fractions);
  kv.flag("include_full_baseline", cfg.include_full_baseline);
  kv.list("seeds", cfg.seeds);
  kv.number("stop.accuracy_threshold", cfg.stop.accuracy_threshold);
  kv.number("stop.max_queries", cfg.stop.max_queries);
  kv.number("stop.time_budget", cfg.stop.time_budget);
  std::optional<std::size_t> window;
  std::optional<double> epsilon;
  kv.number("stop.stabilization_window", window);
  kv.number("stop.stabilization_epsilon", epsilon);
  if (window || epsilon) cfg.stop.stabilization = Stabilization{window.value_or(3), epsilon.value_or(0.01)};
  if (auto v = kv.take("batch")) {
    if (*v == "auto") cfg.batch.reset();
    else cfg.batch = detail::KeyValues::parse<std::size_t>("batch", *v);
  }
  kv.number("auto_iterations", cfg.auto_iterations);
  kv.number("seed_share", cfg.seed_share);
  kv.number("oracle.noise_rate", cfg.noise_rate);

  // output
  if (auto v = kv.take("output.path")) cfg.output_path = *v;
  if (auto v = kv.take("output.format")) cfg.output_format = parse_report_format(*v);

  // stream scenario
  if (auto v = kv.take("stream.measure")) cfg.stream.loop.measure = detail::strategy_kind_or_throw("stream.measure", *v);
  kv.number("stream.threshold", cfg.stream.loop.threshold);
  kv.number("stream.seed_fraction", cfg.stream.loop.seed_fraction);
  kv.number("stream.retrain_every", cfg.stream.loop.retrain_every);
  kv.number("stream.budget_fraction", cfg.stream.budget_fraction);
  kv.number("stream.budget", cfg.stream.budget);

  kv.require_consumed();
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_error, "cannot open config '" + path + "'");
  return parse_config(in);
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace ntal
