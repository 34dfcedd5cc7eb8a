#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "regnav/bundled_regulations.hpp"
#include "regnav/fsm.hpp"
#include "regnav/regdb.hpp"
#include "regnav/sim/audit.hpp"
#include "regnav/sim/config.hpp"
#include "regnav/sim/eventlog.hpp"
#include "regnav/sim/plot.hpp"
#include "regnav/sim/scenarios.hpp"

// Command implementations behind the regnav tool. Each returns the process
// exit code: 0 success, 1 compliance failure, 2 usage or input error.

namespace regnav::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kExitOk = 0;
inline constexpr int kExitNonCompliant = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kOutRootEnv = "REGNAV_OUT_ROOT";

namespace fs = std::filesystem;

namespace detail {

inline std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return ss.str();
}

inline void write_file(const fs::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
}

inline std::string utc_stamp(std::string_view fmt_spec) {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format(fmt::runtime(fmt_spec), now);
}

/// Loads a regulation table, or the bundled one when no path is given.
inline regdb::RegulationDatabase load_db(const std::optional<std::string>& path) {
  if (!path) return regdb::bundled_database();
  const auto text = read_file(*path);
  if (!text) throw std::runtime_error("cannot read '" + *path + "'");
  return regdb::parse_regulation_csv(*text, fsm::state_registry());
}

}  // namespace detail

/// Maps spelling variants onto library variant names: hyphens become
/// underscores, and "no_turn_sign" names the no-turn-on-red variant.
inline std::string canonical_variant(std::string v) {
  for (auto& c : v) {
    if (c == '-') c = '_';
  }
  if (v == "no_turn_sign") return "no_turn_on_red";
  return v;
}

inline int cmd_validate_db(const std::string& path, std::ostream& out, std::ostream& err) {
  const auto text = detail::read_file(path);
  if (!text) {
    err << "error: cannot read '" << path << "'\n";
    return kExitUsage;
  }
  regdb::RegulationDatabase db;
  try {
    regdb::ParseOptions opts;
    opts.check_states = false;  // let the validator report unknown states
    db = regdb::parse_regulation_csv(*text, fsm::state_registry(), opts);
  } catch (const std::exception& e) {
    err << "error: " << path << ": " << e.what() << '\n';
    return kExitUsage;
  }
  const auto violations = regdb::validate_database(db, fsm::state_registry());
  for (const auto& v : violations) out << v.code_id << ": " << v.message << '\n';
  out << violations.size() << " violations in " << db.records().size() << " records\n";
  return violations.empty() ? kExitOk : kExitNonCompliant;
}

struct RunOptions {
  std::string scenario;  // library name or path to a JSON config
  std::string variant = "default";
  std::optional<std::uint64_t> seed;  // a config file keeps its own seed unless given
  std::optional<std::string> out_dir;
  std::optional<std::string> db_path;
};

/// Fresh run directory under the output root, suffixed until unused.
inline fs::path unique_run_dir(const fs::path& root, const std::string& stem) {
  fs::path dir = root / stem;
  for (int n = 2; fs::exists(dir); ++n) dir = root / fmt::format("{}-{}", stem, n);
  return dir;
}

inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  sim::RunSpec spec;
  regdb::RegulationDatabase db;
  try {
    db = detail::load_db(opt.db_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const bool from_file = opt.scenario.ends_with(".json") || fs::is_regular_file(opt.scenario);
  try {
    if (from_file) {
      spec = sim::load_run_spec(opt.scenario);
      if (opt.seed) spec.seed = *opt.seed;
      if (spec.scenario.empty()) spec.scenario = fs::path(opt.scenario).stem().string();
    } else {
      spec = sim::make_scenario(opt.scenario, canonical_variant(opt.variant), opt.seed.value_or(0));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  fs::path dir;
  if (opt.out_dir) {
    dir = *opt.out_dir;
    if (fs::exists(dir / "manifest.json")) {
      err << "error: '" << dir.string() << "' already holds a run\n";
      return kExitUsage;
    }
  } else {
    const char* env = std::getenv(kOutRootEnv);
    const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
    dir = unique_run_dir(root, fmt::format("{}-{}-seed{}-{}", spec.scenario, spec.variant, spec.seed,
                                           detail::utc_stamp("{:%Y%m%dT%H%M%SZ}")));
  }

  try {
    fs::create_directories(dir);
    const nlohmann::json manifest = {{"config", opt.scenario},
                                     {"variant", spec.variant},
                                     {"seed", spec.seed},
                                     {"output_dir", fs::absolute(dir).string()},
                                     {"tool_version", kToolVersion},
                                     {"started_at", detail::utc_stamp("{:%Y-%m-%dT%H:%M:%SZ}")}};
    detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    sim::save_run_spec(spec, (dir / "config.json").string());

    const auto result = sim::run_scenario(spec, db);
    const auto report = sim::check_compliance(result.log, db, spec.world.map);
    detail::write_file(dir / "eventlog.csv", sim::to_csv(result.log));
    nlohmann::json rep = sim::to_json(report);
    rep["status"] = sim::to_string(result.status);
    detail::write_file(dir / "report.json", rep.dump(2) + "\n");

    out << fmt::format("{} {} seed {}: {} at t={:.1f} s, {} planner cycles, {} describer queries\n",
                       spec.scenario, spec.variant, spec.seed, sim::to_string(result.status),
                       result.final_state.t, result.planner_cycles, result.describer_queries);
    for (const auto& f : report.findings) {
      if (f.no_data) continue;
      out << fmt::format("  {} {:<26} {} margin {:.3f} {}\n", f.code_id, f.check,
                         f.satisfied ? "ok  " : "FAIL", f.margin, f.unit);
    }
    out << "  output: " << dir.string() << '\n';
    const bool ok = result.status == sim::RunStatus::Completed && report.all_satisfied();
    return ok ? kExitOk : kExitNonCompliant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline std::optional<sim::EventLog> load_log(const std::string& path, std::ostream& err) {
  const auto text = detail::read_file(path);
  if (!text) {
    err << "error: cannot read '" << path << "'\n";
    return std::nullopt;
  }
  try {
    return sim::parse_event_log(*text);
  } catch (const sim::LogFormatError& e) {
    err << "error: " << path << ": " << e.what() << '\n';
    return std::nullopt;
  }
}

inline int cmd_plot(const std::string& log_path, const std::string& out_path, std::ostream& out,
                    std::ostream& err) {
  const auto log = load_log(log_path, err);
  if (!log) return kExitUsage;
  try {
    detail::write_file(out_path, sim::render_station_plot(*log));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  out << "wrote " << out_path << '\n';
  return kExitOk;
}

/// Audits a saved log. The map comes from --config, else a config.json next
/// to the log, else the library scenario named in the log preamble.
inline int cmd_report(const std::string& log_path, const std::optional<std::string>& config,
                      const std::optional<std::string>& db_path, std::ostream& out, std::ostream& err) {
  const auto log = load_log(log_path, err);
  if (!log) return kExitUsage;
  try {
    const auto db = detail::load_db(db_path);
    const fs::path sibling = fs::path(log_path).parent_path() / "config.json";
    sim::RunSpec spec;
    if (config) {
      spec = sim::load_run_spec(*config);
    } else if (fs::exists(sibling)) {
      spec = sim::load_run_spec(sibling.string());
    } else {
      spec = sim::make_scenario(log->scenario, log->variant, log->seed);
    }
    const auto report = sim::check_compliance(*log, db, spec.world.map);
    out << sim::to_json(report).dump(2) << '\n';
    return report.all_satisfied() ? kExitOk : kExitNonCompliant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace regnav::cli
