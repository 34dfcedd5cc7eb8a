#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "regnav/bundled_regulations.hpp"
#include "regnav/fsm.hpp"
#include "regnav/regdb.hpp"
#include "support/regdb_oracle.hpp"

using namespace regnav;
using namespace regnav::regdb;
using namespace regnav::test_support;

namespace {

const std::string kHeader(kCsvHeader);

const std::string kTableIRow =
    "CVC-22348,state,California,2024-01-01,\"A person who drives a vehicle upon a highway at a "
    "speed greater than 100 miles per hour is guilty…\",highway,is guilty…,FALSE,"
    "road_type=Highway;max_speed=100 mph,Car Following; Go Straight; Overtaking,"
    "Car Following; Go Straight; Overtaking";

RegulationDatabase table_i_db() {
  return parse_regulation_csv(kHeader + "\n" + kTableIRow + "\n", fsm::state_registry());
}

StateRef ref(fsm::Superstate sup, fsm::Substate sub) {
  return StateRef::of(fsm::DrivingState(sup, sub));
}

const StateRef kGoStraight = ref(fsm::Superstate::LaneFollowing, fsm::Substate::GoStraight);

}  // namespace

TEST(Parse, TableIRecord) {
  const auto db = table_i_db();
  ASSERT_EQ(db.records().size(), 1u);
  const auto& r = db.records()[0];
  EXPECT_EQ(r.code_id, "CVC-22348");
  EXPECT_FALSE(r.legality);
  EXPECT_EQ(r.road_type, geom::RoadType::Highway);
  EXPECT_EQ(r.attributes.size(), 1u);
  EXPECT_EQ(r.attributes.at("max_speed"), (Quantity{100.0, "mph"}));
  EXPECT_EQ(r.possible_current_states,
            (std::set<std::string>{"Car Following", "Go Straight", "Overtaking"}));
  EXPECT_EQ(r.possible_next_states.size(), 3u);
  EXPECT_TRUE(db.active_chain().empty());
}

TEST(Parse, HeaderOnly) {
  EXPECT_TRUE(parse_regulation_csv(kHeader + "\n", fsm::state_registry()).records().empty());
  EXPECT_TRUE(parse_regulation_csv(kHeader, fsm::state_registry()).records().empty());
}

TEST(Parse, RoundTripTwentyFiveRecords) {
  Generator g(21);
  std::vector<RegulationRecord> recs;
  for (int i = 0; i < 25; ++i) recs.push_back(g.record(i));
  const RegulationDatabase db(recs, fsm::state_registry());
  const auto text = to_csv(db);
  const auto back = parse_regulation_csv(text, fsm::state_registry());
  ASSERT_EQ(back.records().size(), 25u);
  for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(back.records()[i], recs[i]) << i;
  EXPECT_EQ(to_csv(back), text);
}

TEST(Parse, WrongColumnCountNamesRow) {
  const std::string text = kHeader + "\n" + kTableIRow + "\nA,state,California,2024-01-01\n";
  try {
    parse_regulation_csv(text, fsm::state_registry());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(Parse, UnknownColumnRejected) {
  EXPECT_THROW(parse_regulation_csv(kHeader + ",extra\n", fsm::state_registry()), ParseError);
}

TEST(Parse, UnknownStateNamed) {
  std::string row = kTableIRow;
  row.replace(row.rfind("Overtaking"), 10, "Warp Drive");
  try {
    parse_regulation_csv(kHeader + "\n" + row + "\n", fsm::state_registry());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Warp Drive"), std::string::npos);
  }
}

TEST(Parse, DuplicateCodeIdConflicts) {
  EXPECT_THROW(
      parse_regulation_csv(kHeader + "\n" + kTableIRow + "\n" + kTableIRow + "\n",
                           fsm::state_registry()),
      ConflictError);
  // the same id in another jurisdiction is fine
  std::string city = kTableIRow;
  city.replace(city.find("state,California"), 16, "city,Los Angeles");
  EXPECT_EQ(parse_regulation_csv(kHeader + "\n" + kTableIRow + "\n" + city + "\n",
                                 fsm::state_registry())
                .records()
                .size(),
            2u);
}

// Random edits to a valid table either parse fully or raise one of the
// positioned error types; nothing else escapes.
TEST(Parse, TotalUnderMutation) {
  Generator g(22);
  std::vector<RegulationRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(g.record(i));
  const auto base = to_csv(RegulationDatabase(recs, fsm::state_registry()));
  const std::string alphabet = ",;\"\n=xX9 -";
  int parsed = 0, rejected = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text = base;
    const int edits = 1 + g.pick(3);
    for (int e = 0; e < edits; ++e) {
      const auto pos = static_cast<std::size_t>(g.pick(static_cast<int>(text.size())));
      switch (g.pick(3)) {
        case 0: text.erase(pos, 1); break;
        case 1: text.insert(pos, 1, alphabet[g.pick(static_cast<int>(alphabet.size()))]); break;
        default: text[pos] = alphabet[g.pick(static_cast<int>(alphabet.size()))]; break;
      }
    }
    try {
      const auto db = parse_regulation_csv(text, fsm::state_registry());
      ++parsed;
      EXPECT_LE(db.records().size(), 12u);
    } catch (const ParseError&) {
      ++rejected;
    } catch (const ValidationError&) {
      ++rejected;
    } catch (const ConflictError&) {
      ++rejected;
    }
  }
  EXPECT_GT(parsed, 0);
  EXPECT_GT(rejected, 0);
}

TEST(Validate, UnknownStateReported) {
  auto r = table_i_db().records()[0];
  r.possible_current_states = {"Warp Drive"};
  r.possible_next_states = {"Go Straight"};
  const RegulationDatabase db({r}, fsm::state_registry());
  const auto v = validate_database(db, fsm::state_registry());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].message.find("Warp Drive"), std::string::npos);
}

TEST(Validate, TableIRecordIsSound) {
  EXPECT_TRUE(validate_database(table_i_db(), fsm::state_registry()).empty());
}

TEST(Validate, BundledDatabaseIsSound) {
  const auto db = bundled_database();
  EXPECT_EQ(db.records().size(), 8u);
  EXPECT_TRUE(validate_database(db, fsm::state_registry()).empty());
}

TEST(Validate, BundledCopyMatchesDataFile) {
  std::ifstream in(std::string(REGNAV_SOURCE_DIR) + "/data/regulations.csv");
  ASSERT_TRUE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), std::string(kBundledRegulationsCsv));
}

TEST(Validate, FiftyCorruptionsFiftyViolations) {
  Generator g(23);
  std::vector<RegulationRecord> recs;
  for (int i = 0; i < 50; ++i) {
    RegulationRecord r = g.record(i);
    r.legality = false;
    if (r.condition_keywords.empty()) r.condition_keywords = {"cyclist"};
    if (r.attributes.empty()) r.attributes["max_speed"] = {30, "mph"};
    recs.push_back(r);
  }
  ASSERT_TRUE(validate_database(RegulationDatabase(recs, fsm::state_registry()),
                                fsm::state_registry())
                  .empty());
  for (auto& r : recs) {
    switch (g.pick(6)) {
      case 0: r.possible_next_states.insert("Warp Drive"); break;
      case 1: r.condition_keywords.clear(); break;
      case 2: r.attributes.begin()->second.unit.clear(); break;
      case 3: r.attributes.begin()->second.unit = "furlongs"; break;
      case 4: r.attributes["max_speed"] = {-5, "mph"}; break;
      default: r.attributes["max_altitude"] = {3, "m"}; break;
    }
  }
  const auto v = validate_database(RegulationDatabase(recs, fsm::state_registry()),
                                   fsm::state_registry());
  EXPECT_EQ(v.size(), 50u);
}

TEST(Query, TableIRecordOnHighway) {
  const auto db = table_i_db();
  scene::SceneConditions c;
  c.road_type = geom::RoadType::Highway;
  const auto hits = query_applicable(db, kGoStraight, kGoStraight, c);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].code_id, "CVC-22348");
  c.road_type = geom::RoadType::Residential;
  EXPECT_TRUE(query_applicable(db, kGoStraight, kGoStraight, c).empty());
}

TEST(Query, EmptyDatabase) {
  const RegulationDatabase db({}, fsm::state_registry());
  EXPECT_TRUE(query_applicable(db, kGoStraight, kGoStraight, {}).empty());
}

TEST(Query, UnregisteredStateThrows) {
  const auto db = table_i_db();
  EXPECT_THROW(query_applicable(db, {"Warp Drive", "Lane Following"}, kGoStraight, {}),
               QueryError);
}

TEST(Query, IndexMatchesNaiveScan) {
  Generator g(24);
  const auto states = all_states();
  int nonempty = 0;
  for (int round = 0; round < 2; ++round) {
    auto db = random_db(g, 100);
    if (round == 1) {
      db.activate({{JurisdictionLevel::State, "Alpha"}, {JurisdictionLevel::City, "Alpha"}},
                  std::chrono::year{2015} / 6 / 1);
    }
    for (int q = 0; q < 1000; ++q) {
      const auto cur = StateRef::of(states[g.pick(static_cast<int>(states.size()))]);
      const auto next = StateRef::of(states[g.pick(static_cast<int>(states.size()))]);
      const auto c = g.conditions();
      const auto got = keys(query_applicable(db, cur, next, c));
      ASSERT_EQ(got, naive_query(db, cur, next, c));
      nonempty += !got.empty();
    }
  }
  EXPECT_GT(nonempty, 100);
}

TEST(Legality, HighwaySpeedExamples) {
  const auto db = table_i_db();
  scene::SceneConditions c;
  c.road_type = geom::RoadType::Highway;
  PlanFacts fast{kGoStraight, kGoStraight, 105.0, {}, {}, {}};
  const auto bad = evaluate_legality(db, fast, c);
  EXPECT_FALSE(bad.legal);
  EXPECT_EQ(bad.matched_records, std::vector<std::string>{"CVC-22348"});
  EXPECT_EQ(bad.binding_limits.at("max_speed_mph"), 100.0);
  PlanFacts slow{kGoStraight, kGoStraight, 60.0, {}, {}, {}};
  const auto ok = evaluate_legality(db, slow, c);
  EXPECT_TRUE(ok.legal);
  EXPECT_TRUE(ok.matched_records.empty());
}

TEST(Legality, MatchesExhaustivePredicate) {
  Generator g(25);
  const auto states = all_states();
  for (int round = 0; round < 5; ++round) {
    const auto db = random_db(g, 60);
    for (int q = 0; q < 400; ++q) {
      const auto cur = StateRef::of(states[g.pick(static_cast<int>(states.size()))]);
      const auto next = StateRef::of(states[g.pick(static_cast<int>(states.size()))]);
      const auto c = g.conditions();
      const auto f = g.facts(cur, next);
      const auto verdict = evaluate_legality(db, f, c);
      const auto applicable = naive_query(db, cur, next, c);
      std::vector<std::string> expected;
      for (const auto& r : db.records()) {
        const auto key = r.code_id + "@" + r.jurisdiction.name + "/" +
                         std::string(to_string(r.jurisdiction.level));
        if (std::binary_search(applicable.begin(), applicable.end(), key) && naive_violates(r, f)) {
          expected.push_back(r.code_id);
        }
      }
      auto got = verdict.matched_records;
      std::sort(got.begin(), got.end());
      std::sort(expected.begin(), expected.end());
      ASSERT_EQ(got, expected);
      ASSERT_EQ(verdict.legal, expected.empty());
    }
  }
}

TEST(Legality, RemovingRecordNeverMakesIllegal) {
  Generator g(26);
  const auto states = all_states();
  for (int trial = 0; trial < 300; ++trial) {
    const auto db = random_db(g, 30);
    const auto cur = StateRef::of(states[g.pick(static_cast<int>(states.size()))]);
    const auto next = StateRef::of(states[g.pick(static_cast<int>(states.size()))]);
    const auto c = g.conditions();
    const auto f = g.facts(cur, next);
    if (!evaluate_legality(db, f, c).legal) continue;
    auto recs = db.records();
    recs.erase(recs.begin() + g.pick(static_cast<int>(recs.size())));
    EXPECT_TRUE(evaluate_legality(RegulationDatabase(recs, fsm::state_registry()), f, c).legal);
  }
}

TEST(Legality, LimitsTightenWithinALevel) {
  Generator g(27);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<RegulationRecord> recs;
    for (int i = 0; i < 1 + g.pick(6); ++i) {
      auto r = g.record(i);
      r.jurisdiction = {JurisdictionLevel::State, "Alpha"};
      recs.push_back(r);
    }
    const auto before = binding_limits(recs);
    auto extra = g.record(99);
    extra.jurisdiction = {JurisdictionLevel::State, "Alpha"};
    recs.push_back(extra);
    const auto after = binding_limits(recs);
    for (const auto& [k, v] : before) {
      ASSERT_TRUE(after.contains(k));
      if (k == "max_speed_mph") EXPECT_LE(after.at(k), v);
      else EXPECT_GE(after.at(k), v);
    }
  }
}

TEST(Legality, CityOverridesState) {
  auto state = table_i_db().records()[0];
  state.road_type.reset();
  state.condition_keywords = {"school zone"};
  state.attributes = {{"max_speed", {30, "mph"}}};
  auto city = state;
  city.jurisdiction = {JurisdictionLevel::City, "Los Angeles"};
  city.attributes = {{"max_speed", {40, "mph"}}};
  scene::SceneConditions c;
  c.school_zone_ahead = 0.0;
  const PlanFacts f{kGoStraight, kGoStraight, 35.0, {}, {}, {}};

  const RegulationDatabase both({state, city}, fsm::state_registry());
  const auto v = evaluate_legality(both, f, c);
  EXPECT_EQ(v.binding_limits.at("max_speed_mph"), 40.0);
  EXPECT_TRUE(v.legal);  // the state version is shadowed by the city one

  const RegulationDatabase state_only({state}, fsm::state_registry());
  const auto w = evaluate_legality(state_only, f, c);
  EXPECT_EQ(w.binding_limits.at("max_speed_mph"), 30.0);
  EXPECT_FALSE(w.legal);
}

TEST(Legality, PostedLimitBinds) {
  const RegulationDatabase db({}, fsm::state_registry());
  scene::SceneConditions c;
  c.signs = {scene::Sign::SpeedLimit};
  c.posted_speed_limit = 25.0;
  const auto v = evaluate_legality(db, PlanFacts{kGoStraight, kGoStraight, 30.0, {}, {}, {}}, c);
  EXPECT_TRUE(v.legal);
  EXPECT_EQ(v.binding_limits.at("max_speed_mph"), 25.0);
}

TEST(Legality, UnknownConditionsNeverViolate) {
  const auto db = bundled_database();
  const auto turn = ref(fsm::Superstate::IntersectionHandling, fsm::Substate::TurnRight);
  const PlanFacts f{kGoStraight, turn, 20.0, 30.0, 0.1, 0.0};
  EXPECT_TRUE(evaluate_legality(db, f, {}).legal);
  scene::SceneConditions red;
  red.traffic_light = scene::TrafficLight::Red;
  EXPECT_FALSE(evaluate_legality(db, f, red).legal);
}

TEST(Activation, ChainAndDateFilter) {
  auto a = table_i_db().records()[0];
  auto b = a;
  b.jurisdiction = {JurisdictionLevel::City, "Los Angeles"};
  b.effective_date = std::chrono::year{2030} / 1 / 1;
  RegulationDatabase db({a, b}, fsm::state_registry());
  scene::SceneConditions c;
  c.road_type = geom::RoadType::Highway;
  db.activate({{JurisdictionLevel::State, "California"}});
  EXPECT_EQ(query_applicable(db, kGoStraight, kGoStraight, c).size(), 1u);
  db.activate({{JurisdictionLevel::State, "California"}, {JurisdictionLevel::City, "Los Angeles"}},
              std::chrono::year{2025} / 1 / 1);
  const auto hits = query_applicable(db, kGoStraight, kGoStraight, c);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].jurisdiction.level, JurisdictionLevel::State);
  db.activate({});
  const auto all = query_applicable(db, kGoStraight, kGoStraight, c);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].jurisdiction.level, JurisdictionLevel::City);
}

TEST(Concurrency, ParallelReadersAgree) {
  Generator g(28);
  const auto db = random_db(g, 100);
  const auto states = all_states();
  std::vector<std::tuple<StateRef, StateRef, scene::SceneConditions>> queries;
  for (int i = 0; i < 300; ++i) {
    queries.emplace_back(StateRef::of(states[g.pick(static_cast<int>(states.size()))]),
                         StateRef::of(states[g.pick(static_cast<int>(states.size()))]),
                         g.conditions());
  }
  std::vector<std::vector<std::string>> expected;
  for (const auto& [c, n, cond] : queries) expected.push_back(keys(query_applicable(db, c, n, cond)));
  std::vector<int> mismatches(4, 0);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& [c, n, cond] = queries[i];
        mismatches[t] += keys(query_applicable(db, c, n, cond)) != expected[i];
      }
    });
  }
  for (auto& th : threads) th.join();
  for (int m : mismatches) EXPECT_EQ(m, 0);
}
