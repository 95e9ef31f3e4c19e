#include "ovs/sim/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int exit_ok         = 0;
constexpr int exit_invalid    = 2;
constexpr int exit_assertions = 3;

int cmd_run(const std::string& path, const std::string& trace_path, const std::string& report_path,
            std::optional<std::uint64_t> seed, const std::vector<std::string>& overrides)
{
  auto all = overrides;
  if (seed) {
    all.push_back("seed=" + std::to_string(*seed));
  }
  const auto sc = ovs::sim::load_scenario(path, all);

  std::ofstream trace_file;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) {
      std::cerr << "cannot write " << trace_path << "\n";
      return exit_invalid;
    }
  }
  ovs::sim::trace_log trace(trace_path.empty() ? nullptr : &trace_file);
  const auto          report   = ovs::sim::run_scenario(sc, &trace);
  const auto          failures = ovs::sim::check_expectations(sc, report);

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      std::cerr << "cannot write " << report_path << "\n";
      return exit_invalid;
    }
    ovs::sim::emit_report(out, report, failures);
  } else {
    ovs::sim::emit_report(std::cout, report, failures);
  }
  for (const auto& f : failures) {
    std::cerr << "expectation failed: " << f << "\n";
  }
  return failures.empty() ? exit_ok : exit_assertions;
}

int cmd_validate(const std::string& path, const std::vector<std::string>& overrides)
{
  const auto sc = ovs::sim::load_scenario(path, overrides);
  std::cout << sc.name << ": ok (" << sc.cells.size() << " cells, " << sc.ues.size() << " UEs"
            << (sc.attack ? ", attack " + std::string(ovs::to_string(sc.attack->strategy)) : std::string()) << ")\n";
  return exit_ok;
}

int cmd_decode(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return exit_invalid;
  }
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    try {
      std::cout << ovs::sim::decode_trace_line(line) << "\n";
    } catch (const std::exception& e) {
      std::cerr << path << ":" << n << ": " << e.what() << "\n";
      return exit_invalid;
    }
  }
  return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Uplink overshadowing simulator for 5G standalone connection setup"};
  app.require_subcommand(1);

  std::string                  scenario_path, trace_path, report_path, decode_path;
  std::vector<std::string>     overrides;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run a scenario");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--trace", trace_path, "Write the NDJSON trace here");
  run->add_option("--report", report_path, "Write the report here instead of stdout");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--override", overrides, "key.path=value, repeatable");

  auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
  validate->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  validate->add_option("--override", overrides, "key.path=value, repeatable");

  auto* decode = app.add_subcommand("decode-trace", "Print a trace with all carried bytes decoded");
  decode->add_option("file", decode_path, "NDJSON trace")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_invalid;
  }

  try {
    if (*run) {
      return cmd_run(scenario_path, trace_path, report_path, seed, overrides);
    }
    if (*validate) {
      return cmd_validate(scenario_path, overrides);
    }
    return cmd_decode(decode_path);
  } catch (const ovs::sim::scenario_error& e) {
    std::cerr << e.what() << "\n";
    return exit_invalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_invalid;
  }
}
