#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntal/config.hpp"
#include "ntal/engine.hpp"
#include "ntal/error.hpp"
#include "ntal/experiment.hpp"

namespace ntal {

/// Fixed 4-decimal rendering used for every real in text reports.
inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

inline std::string percent_label(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g%%", fraction * 100.0);
  return buf;
}

inline constexpr const char* csv_header = "strategy,fraction,seed,time_s,accuracy,tar,ttr";

inline void write_csv_report(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << csv_header << '\n';
  for (const auto& r : rows)
    out << r.strategy << ',' << fixed4(r.fraction) << ',' << r.seed << ',' << fixed4(r.time_seconds) << ','
        << fixed4(r.accuracy) << ',' << fixed4(r.tar) << ',' << fixed4(r.ttr) << '\n';
}

/// JSON keeps full precision plus the raw timing and baseline fields, so it
/// can be re-rendered losslessly and tar/ttr recomputed.
inline nlohmann::json rows_to_json(const std::vector<ExperimentRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"strategy", r.strategy},
                   {"fraction", r.fraction},
                   {"seed", r.seed},
                   {"time_s", r.time_seconds},
                   {"accuracy", r.accuracy},
                   {"tar", r.tar},
                   {"ttr", r.ttr},
                   {"train_s", r.train_seconds},
                   {"select_s", r.select_seconds},
                   {"full_accuracy", r.full_accuracy},
                   {"full_train_s", r.full_train_seconds}});
  return arr;
}

inline std::vector<ExperimentRow> rows_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw Error(Errc::config_error, "report json must be an array of rows");
  std::vector<ExperimentRow> rows;
  try {
    for (const auto& o : arr) {
      ExperimentRow r;
      r.strategy = o.at("strategy").get<std::string>();
      r.fraction = o.at("fraction").get<double>();
      r.seed = o.at("seed").get<std::uint64_t>();
      r.time_seconds = o.at("time_s").get<double>();
      r.accuracy = o.at("accuracy").get<double>();
      r.tar = o.at("tar").get<double>();
      r.ttr = o.at("ttr").get<double>();
      r.train_seconds = o.value("train_s", r.time_seconds);
      r.select_seconds = o.value("select_s", 0.0);
      r.full_accuracy = o.value("full_accuracy", 0.0);
      r.full_train_seconds = o.value("full_train_s", 0.0);
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, std::string("malformed report row: ") + e.what());
  }
  return rows;
}

inline void write_json_report(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << rows_to_json(rows).dump(2) << '\n';
}

/// One table per strategy, fractions as columns, seed means in the cells.
inline void write_md_report(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  std::map<std::string, std::map<double, std::vector<const ExperimentRow*>>> cells;
  for (const auto& r : rows) cells[r.strategy][r.fraction].push_back(&r);

  bool first = true;
  for (const auto& [strategy, by_fraction] : cells) {
    if (!first) out << '\n';
    first = false;
    std::set<std::uint64_t> seeds;
    for (const auto& [f, rs] : by_fraction)
      for (const auto* r : rs) seeds.insert(r->seed);
    out << "## " << strategy << "\n\n";
    out << "Mean over " << seeds.size() << (seeds.size() == 1 ? " seed" : " seeds") << ".\n\n";
    out << "| Metric |";
    for (const auto& [f, rs] : by_fraction) out << ' ' << percent_label(f) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < by_fraction.size(); ++i) out << "---:|";
    out << '\n';

    auto line = [&](const char* label, auto field) {
      out << "| " << label << " |";
      for (const auto& [f, rs] : by_fraction) {
        double s = 0.0;
        for (const auto* r : rs) s += field(*r);
        out << ' ' << fixed4(s / static_cast<double>(rs.size())) << " |";
      }
      out << '\n';
    };
    line("Accuracy", [](const ExperimentRow& r) { return r.accuracy; });
    line("Time (s)", [](const ExperimentRow& r) { return r.time_seconds; });
    line("TAR", [](const ExperimentRow& r) { return r.tar; });
    line("TTR", [](const ExperimentRow& r) { return r.ttr; });
  }
}

inline void write_report(std::ostream& out, const std::vector<ExperimentRow>& rows, ReportFormat format) {
  if (rows.empty()) throw Error(Errc::empty_report, "no rows to report");
  switch (format) {
    case ReportFormat::csv: write_csv_report(out, rows); break;
    case ReportFormat::json: write_json_report(out, rows); break;
    case ReportFormat::md: write_md_report(out, rows); break;
  }
}

inline void emit_report(const std::vector<ExperimentRow>& rows, ReportFormat format, const std::string& path) {
  if (rows.empty()) throw Error(Errc::empty_report, "no rows to report");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  write_report(out, rows, format);
  out.flush();
  if (!out) throw Error(Errc::io_error, "write failed for '" + path + "'");
}

inline std::vector<ExperimentRow> load_json_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, "'" + path + "' is not valid json: " + e.what());
  }
  return rows_from_json(j);
}

// ---------------------------------------------------------------------------
// Stream histories (learning curves)

inline void write_stream_report(std::ostream& out, const std::vector<StreamRunResult>& runs, ReportFormat format) {
  if (runs.empty()) throw Error(Errc::empty_report, "no stream runs to report");
  switch (format) {
    case ReportFormat::json: {
      auto arr = nlohmann::json::array();
      for (const auto& run : runs) {
        auto its = nlohmann::json::array();
        for (const auto& it : run.history.iterations)
          its.push_back({{"n_labeled", it.n_labeled},
                         {"queries", it.queried.size()},
                         {"accuracy", it.accuracy},
                         {"selection_s", it.selection_seconds},
                         {"training_s", it.training_seconds}});
        arr.push_back({{"seed", run.seed},
                       {"stop_reason", run.history.stop_reason ? to_string(*run.history.stop_reason) : "none"},
                       {"iterations", its}});
      }
      out << arr.dump(2) << '\n';
      break;
    }
    case ReportFormat::csv:
    case ReportFormat::md: {
      const bool md = format == ReportFormat::md;
      if (md) out << "| seed | iteration | n_labeled | queries | accuracy | selection_s | training_s | stop_reason |\n"
                  << "|---:|---:|---:|---:|---:|---:|---:|---|\n";
      else out << "seed,iteration,n_labeled,queries,accuracy,selection_s,training_s,stop_reason\n";
      const char* sep = md ? " | " : ",";
      for (const auto& run : runs) {
        const std::string reason{run.history.stop_reason ? to_string(*run.history.stop_reason) : "none"};
        for (std::size_t i = 0; i < run.history.iterations.size(); ++i) {
          const auto& it = run.history.iterations[i];
          if (md) out << "| ";
          out << run.seed << sep << i << sep << it.n_labeled << sep << it.queried.size() << sep << fixed4(it.accuracy)
              << sep << fixed4(it.selection_seconds) << sep << fixed4(it.training_seconds) << sep
              << (i + 1 == run.history.iterations.size() ? reason : "");
          out << (md ? " |\n" : "\n");
        }
      }
      break;
    }
  }
}

}  // namespace ntal
