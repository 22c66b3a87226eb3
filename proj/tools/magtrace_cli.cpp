#include <CLI11.hpp>
#include <iostream>

#include "magtrace/magtrace.hpp"

using magtrace::harness::json;

namespace {

int load(const std::string& path, json& out) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "error: config: cannot open " << path << '\n';
    return 1;
  }
  try {
    out = json::parse(f);
  } catch (const json::parse_error& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magtrace: magnetic fractional Sobolev trace experiments"};
  app.require_subcommand(1);
  int threads = 1;
  int multiplier = 1;
  bool as_json = false;
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--resolution-multiplier", multiplier, "scale grid n and t_count")->check(CLI::PositiveNumber);
  app.add_flag("--json", as_json, "machine-readable output");

  std::string config;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "run one experiment");
  auto* sweep = app.add_subcommand("sweep", "run over a list axis and fit a log-log slope");
  for (auto* sub : {run, sweep}) {
    sub->add_option("--config", config, "config JSON")->required();
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--resolution-multiplier", multiplier, "scale grid n and t_count")->check(CLI::PositiveNumber);
    sub->add_flag("--json", as_json, "print the report JSON");
  }
  auto* list = app.add_subcommand("list", "list registered experiments");
  list->add_flag("--json", as_json, "registry as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  magtrace::parallel::set_threads(threads);

  if (list->parsed()) {
    if (as_json) std::cout << magtrace::harness::registry_json().dump(2) << '\n';
    else std::cout << magtrace::harness::registry_text();
    return 0;
  }

  json cfg;
  if (load(config, cfg)) return 1;
  const auto r = run->parsed() ? magtrace::harness::run(cfg, out, multiplier) : magtrace::harness::sweep(cfg, out, multiplier);
  if (r.exit_code == magtrace::harness::kInvalid) {
    std::cerr << r.message << '\n';
    return r.exit_code;
  }
  if (as_json) std::cout << r.report.dump(2) << '\n';
  else std::cout << r.message << "  -> " << r.report_path.string() << '\n';
  return r.exit_code;
}
