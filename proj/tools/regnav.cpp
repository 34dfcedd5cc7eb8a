#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "regnav/cli.hpp"

int main(int argc, char** argv) {
  using namespace regnav::cli;
  CLI::App app{"Regulation-aware planning simulator: regulation tables, scenario runs, audits, plots"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string db_path;
  auto* validate = app.add_subcommand("validate-db", "check a regulation table for integrity problems");
  validate->add_option("path", db_path, "regulation CSV")->required();

  RunOptions run_opts;
  std::string out_dir, run_db;
  auto* run = app.add_subcommand("run", "run a library scenario or a JSON scenario config");
  run->add_option("scenario", run_opts.scenario, "scenario name or config path")->required();
  run->add_option("--variant", run_opts.variant, "scenario variant")->capture_default_str();
  run->add_option("--seed", run_opts.seed, "seed for every random draw (default 0, or the config file's)");
  run->add_option("--out", out_dir, "run directory (default: a fresh one under $REGNAV_OUT_ROOT or ./runs)");
  run->add_option("--db", run_db, "regulation CSV (default: bundled table)");

  std::string log_path, plot_out;
  auto* plot = app.add_subcommand("plot", "draw station over time from an event log as SVG");
  plot->add_option("log", log_path, "event log CSV")->required();
  plot->add_option("--out", plot_out, "SVG file to write")->required();

  std::string report_log, report_config, report_db;
  auto* report = app.add_subcommand("report", "audit an event log for regulation compliance");
  report->add_option("log", report_log, "event log CSV")->required();
  report->add_option("--config", report_config, "scenario config holding the map");
  report->add_option("--db", report_db, "regulation CSV (default: bundled table)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional(s); };
  if (*validate) return cmd_validate_db(db_path, std::cout, std::cerr);
  if (*run) {
    run_opts.out_dir = opt(out_dir);
    run_opts.db_path = opt(run_db);
    return cmd_run(run_opts, std::cout, std::cerr);
  }
  if (*plot) return cmd_plot(log_path, plot_out, std::cout, std::cerr);
  return cmd_report(report_log, opt(report_config), opt(report_db), std::cout, std::cerr);
}
