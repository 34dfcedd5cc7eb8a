#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "regnav/regdb.hpp"

namespace regnav::sim {

class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kEventLogVersion = 1;
inline constexpr std::string_view kEventLogMagic = "# regnav-eventlog";
inline constexpr std::string_view kEventLogHeader =
    "t,x,y,heading,speed,accel,curvature,station,superstate,substate,selected_plan,total_cost,"
    "record,id,lateral,length,width,info";

/// One row of the run record. `record` is one of: ego, actor, signal, sign,
/// stop_line, zone, event. Event payloads live in `info` as a JSON object.
struct LogRow {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double curvature = 0.0;
  double station = 0.0;
  std::string superstate;
  std::string substate;
  long selected_plan = -1;
  double total_cost = std::numeric_limits<double>::quiet_NaN();
  std::string record;
  int id = 0;
  double lateral = 0.0;
  double length = 0.0;
  double width = 0.0;
  nlohmann::json info = nlohmann::json::object();

  std::string kind() const { return info.value("kind", std::string{}); }
};

struct EventLog {
  std::string scenario;
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<LogRow> rows;

  std::vector<const LogRow*> select(std::string_view record) const {
    std::vector<const LogRow*> out;
    for (const auto& r : rows) {
      if (r.record == record) out.push_back(&r);
    }
    return out;
  }

  std::vector<const LogRow*> events(std::string_view kind) const {
    std::vector<const LogRow*> out;
    for (const auto& r : rows) {
      if (r.record == "event" && r.kind() == kind) out.push_back(&r);
    }
    return out;
  }

  void event(double t, nlohmann::json info) {
    LogRow r;
    r.t = t;
    r.record = "event";
    r.info = std::move(info);
    rows.push_back(std::move(r));
  }
};

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return {};
  const std::string s = fmt::format("{:.6f}", v);
  return s == "-0.000000" ? "0.000000" : s;
}

inline double parse_num(const std::string& s, std::size_t line, const char* column) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw LogFormatError(fmt::format("line {}: bad number '{}' in column {}", line, s, column));
  }
}

}  // namespace detail

inline std::string to_csv(const EventLog& log) {
  std::string out = fmt::format("{} {} scenario={} variant={} seed={}\n", kEventLogMagic,
                                kEventLogVersion, log.scenario, log.variant, log.seed);
  out += kEventLogHeader;
  out += '\n';
  using detail::num;
  for (const auto& r : log.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.t),
                       num(r.x), num(r.y), num(r.heading), num(r.speed), num(r.accel),
                       num(r.curvature), num(r.station), r.superstate, r.substate,
                       r.selected_plan, num(r.total_cost), r.record, r.id, num(r.lateral),
                       num(r.length), num(r.width), regdb::detail::quote(r.info.dump()));
  }
  return out;
}

inline EventLog parse_event_log(std::string_view text) {
  const auto eol = text.find('\n');
  const std::string first(text.substr(0, eol));
  if (first.rfind(kEventLogMagic, 0) != 0) throw LogFormatError("missing event log preamble");
  EventLog log;
  {
    std::istringstream in(first.substr(kEventLogMagic.size()));
    int version = 0;
    if (!(in >> version) || version != kEventLogVersion) {
      throw LogFormatError("unsupported event log version in '" + first + "'");
    }
    std::string kv;
    while (in >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "scenario") log.scenario = value;
      if (key == "variant") log.variant = value;
      if (key == "seed") log.seed = std::stoull(value);
    }
  }
  if (eol == std::string_view::npos) throw LogFormatError("missing header row");
  const auto rows = regdb::detail::read_csv(text.substr(eol + 1));
  if (rows.empty()) throw LogFormatError("missing header row");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kEventLogHeader) throw LogFormatError("unexpected header '" + header + "'");

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    const std::size_t line = i + 2;
    if (f.size() != 18) {
      throw LogFormatError(fmt::format("line {}: expected 18 fields, got {}", line, f.size()));
    }
    using detail::parse_num;
    LogRow r;
    r.t = parse_num(f[0], line, "t");
    r.x = parse_num(f[1], line, "x");
    r.y = parse_num(f[2], line, "y");
    r.heading = parse_num(f[3], line, "heading");
    r.speed = parse_num(f[4], line, "speed");
    r.accel = parse_num(f[5], line, "accel");
    r.curvature = parse_num(f[6], line, "curvature");
    r.station = parse_num(f[7], line, "station");
    r.superstate = f[8];
    r.substate = f[9];
    r.selected_plan = static_cast<long>(parse_num(f[10], line, "selected_plan"));
    r.total_cost = parse_num(f[11], line, "total_cost");
    r.record = f[12];
    r.id = static_cast<int>(parse_num(f[13], line, "id"));
    r.lateral = parse_num(f[14], line, "lateral");
    r.length = parse_num(f[15], line, "length");
    r.width = parse_num(f[16], line, "width");
    try {
      r.info = f[17].empty() ? nlohmann::json::object() : nlohmann::json::parse(f[17]);
    } catch (const nlohmann::json::exception& e) {
      throw LogFormatError(fmt::format("line {}: bad info payload: {}", line, e.what()));
    }
    log.rows.push_back(std::move(r));
  }
  return log;
}

}  // namespace regnav::sim
