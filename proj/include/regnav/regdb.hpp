#pragma once

// Machine-readable traffic regulation database: CSV parsing and
// serialization, integrity validation, applicability queries, and legality
// verdicts for candidate plans.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "regnav/geom.hpp"
#include "regnav/scene.hpp"

namespace regnav::regdb {

inline constexpr std::string_view kCsvHeader =
    "code_id,jurisdiction_level,jurisdiction_name,effective_date,code_text,condition,result,"
    "legality,attributes,possible_current_states,possible_next_states";
inline constexpr std::size_t kColumnCount = 11;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : std::runtime_error(fmt::format("row {}: {}", row, what)), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Jurisdictions

enum class JurisdictionLevel { ModelCode = 0, State = 1, County = 2, City = 3 };

inline std::string_view to_string(JurisdictionLevel l) {
  switch (l) {
    case JurisdictionLevel::ModelCode: return "model_code";
    case JurisdictionLevel::State: return "state";
    case JurisdictionLevel::County: return "county";
    case JurisdictionLevel::City: return "city";
  }
  return "";
}

inline std::optional<JurisdictionLevel> level_from_string(std::string_view s) {
  for (auto l : {JurisdictionLevel::ModelCode, JurisdictionLevel::State,
                 JurisdictionLevel::County, JurisdictionLevel::City}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

/// Higher value wins: city > county > state > model_code.
inline int precedence(JurisdictionLevel l) { return static_cast<int>(l); }

struct Jurisdiction {
  JurisdictionLevel level = JurisdictionLevel::State;
  std::string name;
  friend bool operator==(const Jurisdiction&, const Jurisdiction&) = default;
  friend auto operator<=>(const Jurisdiction&, const Jurisdiction&) = default;
};

using Date = std::chrono::year_month_day;

inline std::optional<Date> parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in{std::string(s)};
  if (!(in >> y >> dash1 >> m >> dash2 >> d) || dash1 != '-' || dash2 != '-' || !in.eof()) {
    return std::nullopt;
  }
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_date(const Date& d) {
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

// ---------------------------------------------------------------------------
// Attribute schema

/// How a numeric attribute is compared with a plan.
enum class Direction {
  ViolatedWhenExceeded,  // plan value > attribute value
  ViolatedWhenUnder,     // plan value < attribute value
  Band,                  // describes where the rule applies; never compared
};

struct AttributeSpec {
  std::string_view name;
  std::string_view unit;
  Direction direction;
  std::string_view binding_key;  // key in LegalityVerdict::binding_limits, empty if none
};

inline constexpr std::array kAttributeSchema = {
    AttributeSpec{"max_speed", "mph", Direction::ViolatedWhenExceeded, "max_speed_mph"},
    AttributeSpec{"min_clearance", "m", Direction::ViolatedWhenUnder, "min_clearance_m"},
    AttributeSpec{"min_stop_time", "s", Direction::ViolatedWhenUnder, "min_stop_time_s"},
    AttributeSpec{"zone_distance_min", "ft", Direction::Band, ""},
    AttributeSpec{"zone_distance_max", "ft", Direction::Band, ""},
};

inline const AttributeSpec* find_attribute(std::string_view name) {
  for (const auto& a : kAttributeSchema) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

struct Quantity {
  double value = 0.0;
  std::string unit;
  friend bool operator==(const Quantity&, const Quantity&) = default;
};

inline std::optional<geom::RoadType> road_type_from_string(std::string_view s) {
  for (auto r : {geom::RoadType::Highway, geom::RoadType::Residential, geom::RoadType::Freeway}) {
    if (geom::to_string(r) == s) return r;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Records

struct RegulationRecord {
  std::string code_id;
  Jurisdiction jurisdiction;
  Date effective_date{std::chrono::year{1970}, std::chrono::month{1}, std::chrono::day{1}};
  std::string code_text;
  std::vector<std::string> condition_keywords;  // lowercase phrases
  std::string result_text;
  bool legality = true;  // false: meeting the condition is illegal
  std::optional<geom::RoadType> road_type;
  std::map<std::string, Quantity> attributes;  // numeric attributes, keyed by schema name
  std::set<std::string> possible_current_states;
  std::set<std::string> possible_next_states;

  friend bool operator==(const RegulationRecord&, const RegulationRecord&) = default;

  std::optional<double> numeric(std::string_view key) const {
    const auto it = attributes.find(std::string(key));
    if (it == attributes.end()) return std::nullopt;
    return it->second.value;
  }
  bool zoned() const {
    return attributes.contains("zone_distance_min") || attributes.contains("zone_distance_max");
  }
};

/// A state as the database sees it: its substate and superstate names.
struct StateRef {
  std::string substate;
  std::string superstate;

  static StateRef of(const fsm::DrivingState& s) {
    return {std::string(fsm::name(s.substate)), std::string(fsm::name(s.superstate))};
  }
  bool in(const std::set<std::string>& names) const {
    return names.contains(substate) || names.contains(superstate);
  }
};

class RegulationDatabase {
 public:
  RegulationDatabase() = default;
  RegulationDatabase(std::vector<RegulationRecord> records, std::set<std::string> registry)
      : records_(std::move(records)), registry_(std::move(registry)) {
    rebuild_index();
  }

  const std::vector<RegulationRecord>& records() const { return records_; }
  const std::set<std::string>& registry() const { return registry_; }
  const std::vector<Jurisdiction>& active_chain() const { return chain_; }

  /// Restricts the database to records from `chain` that are in force on
  /// `date`. An empty chain keeps every jurisdiction.
  void activate(std::vector<Jurisdiction> chain, std::optional<Date> date = std::nullopt) {
    chain_ = std::move(chain);
    date_ = date;
    rebuild_index();
  }

  bool is_active(std::size_t i) const { return active_[i]; }

  /// Indices of active records whose state columns admit (current, next).
  std::vector<std::size_t> candidates(const StateRef& current, const StateRef& next) const {
    std::vector<std::size_t> out;
    for (const auto& c : {current.substate, current.superstate}) {
      for (const auto& n : {next.substate, next.superstate}) {
        if (const auto it = index_.find({c, n}); it != index_.end()) {
          out.insert(out.end(), it->second.begin(), it->second.end());
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  void rebuild_index() {
    index_.clear();
    active_.assign(records_.size(), false);
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      const bool in_chain = chain_.empty() ||
                            std::find(chain_.begin(), chain_.end(), r.jurisdiction) != chain_.end();
      const bool in_force = !date_ || r.effective_date <= *date_;
      if (!in_chain || !in_force) continue;
      active_[i] = true;
      for (const auto& c : r.possible_current_states) {
        for (const auto& n : r.possible_next_states) index_[{c, n}].push_back(i);
      }
    }
  }

  std::vector<RegulationRecord> records_;
  std::set<std::string> registry_;
  std::vector<Jurisdiction> chain_;
  std::optional<Date> date_;
  std::vector<bool> active_;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> index_;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

// RFC 4180 reader: quoted fields may hold commas, doubled quotes and newlines.
inline std::vector<std::vector<std::string>> read_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ParseError(rows.size() + 1, "unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string quote(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(';', start);
    std::string item = scene::detail::trim(s.substr(start, end == std::string_view::npos
                                                                  ? std::string_view::npos
                                                                  : end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

template <typename Range>
std::string join(const Range& items, std::string_view sep) {
  std::string out;
  bool first = true;
  for (const auto& s : items) {
    if (!first) out += sep;
    out += s;
    first = false;
  }
  return out;
}

inline std::string format_number(double v) { return fmt::format("{}", v); }

}  // namespace detail

struct ParseOptions {
  // Reject state names missing from the registry while parsing. Turn off to
  // load a database for validate_database() to report on instead.
  bool check_states = true;
};

/// Parses the delimited regulation table. Either every row parses or an
/// error names the offending row; no partial database is returned.
inline RegulationDatabase parse_regulation_csv(std::string_view text,
                                               const std::set<std::string>& registry,
                                               ParseOptions options = {}) {
  const auto rows = detail::read_csv(text);
  if (rows.empty()) throw ParseError(1, "missing header");
  {
    const auto expected = detail::read_csv(kCsvHeader).front();
    const auto& header = rows.front();
    for (const auto& col : header) {
      if (std::find(expected.begin(), expected.end(), scene::detail::trim(col)) == expected.end()) {
        throw ParseError(1, "unknown column '" + col + "'");
      }
    }
    if (header.size() != expected.size()) throw ParseError(1, "header must list every column");
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (scene::detail::trim(header[i]) != expected[i]) {
        throw ParseError(1, "column " + std::to_string(i + 1) + " must be '" + expected[i] + "'");
      }
    }
  }

  std::vector<RegulationRecord> records;
  std::set<std::pair<Jurisdiction, std::string>> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::size_t row_no = r + 1;
    if (cells.size() != kColumnCount) {
      throw ParseError(row_no, fmt::format("expected {} columns, found {}", kColumnCount,
                                           cells.size()));
    }
    RegulationRecord rec;
    rec.code_id = scene::detail::trim(cells[0]);
    if (rec.code_id.empty()) throw ParseError(row_no, "empty code_id");
    const auto level = level_from_string(scene::detail::trim(cells[1]));
    if (!level) throw ParseError(row_no, "unknown jurisdiction level '" + cells[1] + "'");
    rec.jurisdiction = {*level, scene::detail::trim(cells[2])};
    const auto date = parse_date(scene::detail::trim(cells[3]));
    if (!date) throw ParseError(row_no, "bad effective_date '" + cells[3] + "'");
    rec.effective_date = *date;
    rec.code_text = cells[4];
    for (auto& k : detail::split_list(cells[5])) rec.condition_keywords.push_back(scene::detail::lower(k));
    rec.result_text = cells[6];
    const std::string legality = scene::detail::lower(scene::detail::trim(cells[7]));
    if (legality == "true") rec.legality = true;
    else if (legality == "false") rec.legality = false;
    else throw ParseError(row_no, "legality must be TRUE or FALSE, got '" + cells[7] + "'");

    for (const auto& pair : detail::split_list(cells[8])) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) throw ParseError(row_no, "attribute '" + pair + "' lacks '='");
      const std::string key = scene::detail::trim(pair.substr(0, eq));
      const std::string value = scene::detail::trim(pair.substr(eq + 1));
      if (key == "road_type") {
        const auto rt = road_type_from_string(value);
        if (!rt) throw ParseError(row_no, "unknown road_type '" + value + "'");
        rec.road_type = rt;
        continue;
      }
      std::size_t used = 0;
      double number = 0.0;
      try {
        number = std::stod(value, &used);
      } catch (const std::exception&) {
        throw ParseError(row_no, "attribute " + key + " is not numeric: '" + value + "'");
      }
      rec.attributes[key] = {number, scene::detail::trim(value.substr(used))};
    }

    for (auto& s : detail::split_list(cells[9])) rec.possible_current_states.insert(std::move(s));
    for (auto& s : detail::split_list(cells[10])) rec.possible_next_states.insert(std::move(s));

    if (options.check_states) {
      for (const auto* states : {&rec.possible_current_states, &rec.possible_next_states}) {
        for (const auto& s : *states) {
          if (!registry.contains(s)) {
            throw ValidationError(fmt::format("row {}: unknown state name '{}'", row_no, s));
          }
        }
      }
    }
    if (!seen.insert({rec.jurisdiction, rec.code_id}).second) {
      throw ConflictError(fmt::format("row {}: duplicate code_id '{}' in {} {}", row_no,
                                      rec.code_id, to_string(rec.jurisdiction.level),
                                      rec.jurisdiction.name));
    }
    records.push_back(std::move(rec));
  }
  return RegulationDatabase(std::move(records), registry);
}

inline std::string to_csv(const RegulationDatabase& db) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : db.records()) {
    std::vector<std::string> attrs;
    if (r.road_type) attrs.push_back("road_type=" + geom::to_string(*r.road_type));
    for (const auto& [k, q] : r.attributes) {
      attrs.push_back(k + "=" + detail::format_number(q.value) + (q.unit.empty() ? "" : " " + q.unit));
    }
    const std::vector<std::string> cells = {
        r.code_id,
        std::string(to_string(r.jurisdiction.level)),
        r.jurisdiction.name,
        format_date(r.effective_date),
        r.code_text,
        detail::join(r.condition_keywords, "; "),
        r.result_text,
        r.legality ? "TRUE" : "FALSE",
        detail::join(attrs, "; "),
        detail::join(r.possible_current_states, "; "),
        detail::join(r.possible_next_states, "; "),
    };
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += detail::quote(cells[i]);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string code_id;
  std::string message;
};

/// Every integrity problem in `db`; an empty result means the database is sound.
inline std::vector<Violation> validate_database(const RegulationDatabase& db,
                                                const std::set<std::string>& fsm_registry) {
  std::vector<Violation> out;
  std::set<std::pair<Jurisdiction, std::string>> seen;
  for (const auto& r : db.records()) {
    for (const auto* states : {&r.possible_current_states, &r.possible_next_states}) {
      for (const auto& s : *states) {
        if (!fsm_registry.contains(s)) out.push_back({r.code_id, "unknown state '" + s + "'"});
      }
    }
    if (!r.legality && r.condition_keywords.empty()) {
      out.push_back({r.code_id, "illegal record has no condition keywords"});
    }
    for (const auto& [key, q] : r.attributes) {
      const AttributeSpec* spec = find_attribute(key);
      if (!spec) {
        out.push_back({r.code_id, "unknown attribute '" + key + "'"});
        continue;
      }
      if (q.unit.empty()) {
        out.push_back({r.code_id, "attribute " + key + " is missing units"});
      } else if (q.unit != spec->unit) {
        out.push_back({r.code_id, fmt::format("attribute {} has unit '{}', expected '{}'", key,
                                              q.unit, spec->unit)});
      }
      if (key == "max_speed" && !(q.value > 0.0)) {
        out.push_back({r.code_id, "max_speed must be positive"});
      }
    }
    if (!seen.insert({r.jurisdiction, r.code_id}).second) {
      out.push_back({r.code_id, "duplicate code_id within jurisdiction"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Queries

inline bool keywords_match(const RegulationRecord& r, const std::vector<std::string>& view) {
  return std::all_of(r.condition_keywords.begin(), r.condition_keywords.end(),
                     [&](const std::string& k) {
                       return std::any_of(view.begin(), view.end(), [&](const std::string& p) {
                         return p.find(k) != std::string::npos;
                       });
                     });
}

inline void require_registered(const RegulationDatabase& db, const StateRef& s) {
  if (!db.registry().contains(s.substate) || !db.registry().contains(s.superstate)) {
    throw QueryError("unregistered state '" + s.substate + "' / '" + s.superstate + "'");
  }
}

/// Records whose state columns admit (current, next), whose road type
/// matches, and whose every condition keyword appears in the scene's keyword
/// view. When the same code_id exists at several jurisdiction levels, only
/// the highest-precedence version is returned.
inline std::vector<RegulationRecord> query_applicable(const RegulationDatabase& db,
                                                      const StateRef& current, const StateRef& next,
                                                      const scene::SceneConditions& conditions) {
  require_registered(db, current);
  require_registered(db, next);
  const auto view = scene::keyword_view(conditions);
  std::vector<std::size_t> hits;
  for (std::size_t i : db.candidates(current, next)) {
    const auto& r = db.records()[i];
    if (r.road_type && r.road_type != conditions.road_type) continue;
    if (!keywords_match(r, view)) continue;
    hits.push_back(i);
  }
  std::vector<RegulationRecord> out;
  for (std::size_t i : hits) {
    const auto& r = db.records()[i];
    const bool shadowed = std::any_of(hits.begin(), hits.end(), [&](std::size_t j) {
      const auto& o = db.records()[j];
      return o.code_id == r.code_id &&
             precedence(o.jurisdiction.level) > precedence(r.jurisdiction.level);
    });
    if (!shadowed) out.push_back(r);
  }
  return out;
}

/// Legality-relevant summary of a candidate plan. Optional metrics are absent
/// when they do not apply (no zone in the plan, nobody passed, no stop line
/// crossed), and an absent metric never triggers a violation.
struct PlanFacts {
  StateRef current;
  StateRef next;
  double max_speed_mph = 0.0;
  std::optional<double> max_speed_in_zone_mph;
  std::optional<double> min_clearance_m;
  std::optional<double> stop_time_s;  // stopped time before crossing a stop line
};

struct LegalityVerdict {
  bool legal = true;
  std::vector<std::string> matched_records;
  std::map<std::string, double> binding_limits;
};

/// True when `plan` meets every numeric comparison of the illegal record `r`.
/// An illegal record without comparable attributes is violated outright.
inline bool violates(const RegulationRecord& r, const PlanFacts& plan) {
  if (r.legality) return false;
  for (const auto& [key, q] : r.attributes) {
    const AttributeSpec* spec = find_attribute(key);
    if (!spec || spec->direction == Direction::Band) continue;
    std::optional<double> value;
    if (key == "max_speed") {
      value = r.zoned() ? plan.max_speed_in_zone_mph : std::optional<double>(plan.max_speed_mph);
    } else if (key == "min_clearance") {
      value = plan.min_clearance_m;
    } else if (key == "min_stop_time") {
      value = plan.stop_time_s;
    }
    if (!value) return false;
    const bool hit = spec->direction == Direction::ViolatedWhenExceeded ? *value > q.value
                                                                        : *value < q.value;
    if (!hit) return false;
  }
  return true;
}

/// Tightest limits among `records`. Within a jurisdiction level the most
/// restrictive value wins; across levels the highest-precedence level wins.
inline std::map<std::string, double> binding_limits(const std::vector<RegulationRecord>& records) {
  std::map<std::string, std::pair<int, double>> best;
  for (const auto& r : records) {
    for (const auto& [key, q] : r.attributes) {
      const AttributeSpec* spec = find_attribute(key);
      if (!spec || spec->binding_key.empty()) continue;
      const int level = precedence(r.jurisdiction.level);
      const std::string bkey(spec->binding_key);
      auto it = best.find(bkey);
      if (it == best.end() || level > it->second.first) {
        best[bkey] = {level, q.value};
      } else if (level == it->second.first) {
        it->second.second = spec->direction == Direction::ViolatedWhenExceeded
                                ? std::min(it->second.second, q.value)
                                : std::max(it->second.second, q.value);
      }
    }
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : best) out[k] = v.second;
  return out;
}

inline LegalityVerdict evaluate_legality(const RegulationDatabase& db, const PlanFacts& plan,
                                         const scene::SceneConditions& conditions) {
  const auto applicable = query_applicable(db, plan.current, plan.next, conditions);
  LegalityVerdict v;
  for (const auto& r : applicable) {
    if (violates(r, plan)) v.matched_records.push_back(r.code_id);
  }
  v.legal = v.matched_records.empty();
  v.binding_limits = binding_limits(applicable);
  if (conditions.posted_speed_limit) {
    auto [it, inserted] = v.binding_limits.try_emplace("max_speed_mph", *conditions.posted_speed_limit);
    if (!inserted) it->second = std::min(it->second, *conditions.posted_speed_limit);
  }
  return v;
}

}  // namespace regnav::regdb
