// ntal: active-learning benchmark harness for flow-based traffic classification.
//
//   ntal run      --config exp.conf [--seed N] [--output rows.csv] [--format csv|json|md]
//   ntal stream   --config exp.conf [--seed N] [--output curve.csv] [--format csv|json|md]
//   ntal generate --config exp.conf --output flows.csv [--seed N]
//   ntal report   rows.json [--format md] [--output table.md]
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 runtime failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ntal/ntal.hpp"

namespace {

enum ExitCode : int { ok = 0, usage = 1, data = 2, runtime = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string format;
  bool quiet = false;
  std::string input;
};

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ntal::Error(ntal::Errc::io_error, "cannot write '" + path + "'");
  fn(out);
  out.flush();
  if (!out) throw ntal::Error(ntal::Errc::io_error, "write failed for '" + path + "'");
}

ntal::ExperimentConfig load(const Options& opt, bool required) {
  ntal::ExperimentConfig cfg = opt.config.empty() && !required ? ntal::parse_config_string("")
                                                               : ntal::load_config(opt.config);
  if (opt.seed) {
    cfg.seeds = {*opt.seed};
    cfg.source.synthetic.seed = *opt.seed;
  }
  if (!opt.output.empty()) cfg.output_path = opt.output;
  if (!opt.format.empty()) cfg.output_format = ntal::parse_report_format(opt.format);
  return cfg;
}

int cmd_run(const Options& opt) {
  const auto cfg = load(opt, true);
  const auto data = ntal::load_source(cfg.source);
  const auto rows = ntal::run_experiment(cfg, data);
  with_output(cfg.output_path, [&](std::ostream& out) { ntal::write_report(out, rows, cfg.output_format); });
  if (!opt.quiet)
    std::cerr << "ntal: " << rows.size() << " rows (" << ntal::to_string(cfg.output_format) << ") -> "
              << (cfg.output_path.empty() ? "stdout" : cfg.output_path) << '\n';
  return ok;
}

int cmd_stream(const Options& opt) {
  const auto cfg = load(opt, true);
  const auto data = ntal::load_source(cfg.source);
  const auto runs = ntal::run_stream_experiment(cfg, data);
  with_output(cfg.output_path, [&](std::ostream& out) { ntal::write_stream_report(out, runs, cfg.output_format); });
  if (!opt.quiet)
    for (const auto& r : runs)
      std::cerr << "ntal: seed " << r.seed << " final accuracy " << ntal::fixed4(r.history.final_accuracy())
                << " after " << r.history.total_queries() << " queries ("
                << (r.history.stop_reason ? ntal::to_string(*r.history.stop_reason) : "none") << ")\n";
  return ok;
}

int cmd_generate(const Options& opt) {
  const auto cfg = load(opt, false);
  const auto data = ntal::generate_synthetic(cfg.source.synthetic);
  with_output(cfg.output_path, [&](std::ostream& out) { ntal::write_csv(out, data); });
  if (!opt.quiet)
    std::cerr << "ntal: " << data.size() << " records, " << data.n_classes() << " classes -> "
              << (cfg.output_path.empty() ? "stdout" : cfg.output_path) << '\n';
  return ok;
}

int cmd_report(const Options& opt) {
  const auto rows = ntal::load_json_rows(opt.input);
  const auto format = opt.format.empty() ? ntal::ReportFormat::md : ntal::parse_report_format(opt.format);
  with_output(opt.output, [&](std::ostream& out) { ntal::write_report(out, rows, format); });
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning benchmark harness for network traffic classification", "ntal"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "experiment config file (key = value)");
  app.add_option("--seed", opt.seed, "run a single seed instead of the configured list");
  app.add_option("--output", opt.output, "output path (stdout when omitted)");
  app.add_option("--format", opt.format, "report format")->check(CLI::IsMember({"csv", "json", "md"}));
  app.add_flag("--quiet", opt.quiet, "suppress progress messages");

  auto* run = app.add_subcommand("run", "pool-based experiment over the fraction ladder");
  auto* stream = app.add_subcommand("stream", "stream-based selective sampling scenario");
  auto* generate = app.add_subcommand("generate", "write a synthetic flow CSV");
  auto* report = app.add_subcommand("report", "re-render saved json rows");
  report->add_option("input", opt.input, "rows saved with --format json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  if ((run->parsed() || stream->parsed()) && opt.config.empty()) {
    std::cerr << "error: --config is required for '" << (run->parsed() ? "run" : "stream") << "'\n\n"
              << (run->parsed() ? run : stream)->help();
    std::cerr << app.help("", CLI::AppFormatMode::Normal);
    return usage;
  }

  try {
    if (run->parsed()) return cmd_run(opt);
    if (stream->parsed()) return cmd_stream(opt);
    if (generate->parsed()) return cmd_generate(opt);
    if (report->parsed()) return cmd_report(opt);
  } catch (const ntal::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (ntal::category(e.code())) {
      case ntal::ErrorCategory::config: return usage;
      case ntal::ErrorCategory::data: return data;
      case ntal::ErrorCategory::runtime: return runtime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return runtime;
  }
  return usage;
}
