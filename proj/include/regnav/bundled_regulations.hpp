#pragma once

// Built-in copy of data/regulations.csv (kept identical by a unit test).

#include <string_view>

#include "regnav/fsm.hpp"
#include "regnav/regdb.hpp"

namespace regnav::regdb {

inline constexpr std::string_view kBundledRegulationsCsv = R"csv(code_id,jurisdiction_level,jurisdiction_name,effective_date,code_text,condition,result,legality,attributes,possible_current_states,possible_next_states
CVC-22348,state,California,2024-01-01,"A person who drives a vehicle upon a highway at a speed greater than 100 miles per hour is guilty…",highway,is guilty of an infraction,FALSE,road_type=Highway;max_speed=100 mph,Car Following;Go Straight;Overtaking,Car Following;Go Straight;Overtaking
CVC-21760,state,California,2024-01-01,"The driver of a motor vehicle overtaking and passing a bicycle proceeding in the same direction shall not pass at a distance of less than three feet between any part of the motor vehicle and any part of the bicycle or its operator.",cyclist,passing closer than three feet is an infraction,FALSE,min_clearance=0.9144 m,Go Straight;Car Following;Overtaking,Go Straight;Car Following;Overtaking
CVC-21460,state,California,2024-01-01,"When double parallel solid lines are in place, no person driving a vehicle shall drive to the left of them.",solid left lane marking,crossing the solid marking to pass is an infraction,FALSE,,Go Straight;Car Following,Overtake Out
CVC-21650,state,California,2024-01-01,"Upon all highways, a vehicle shall be driven upon the right half of the roadway, except when overtaking and passing another vehicle.",right lane clear,remaining left after the pass is complete is an infraction,FALSE,,Overtake Out,Overtake Out
CVC-21453,state,California,2024-01-01,"A driver facing a steady circular red signal alone shall stop at a marked limit line and remain stopped; after stopping the driver may turn right unless a sign prohibits the turn.",red signal,turning without first stopping is an infraction,FALSE,min_stop_time=0.5 s,Go Straight;Car Following;Stopped At Line;Turn Right,Turn Right
CVC-21461,state,California,2024-01-01,"A driver shall obey the directions of an official traffic control sign, including a sign prohibiting a turn on red.",red signal;no turn on red,turning against the sign is an infraction,FALSE,,Go Straight;Car Following;Stopped At Line;Turn Right,Turn Right
CVC-22450,state,California,2024-01-01,"The driver of any vehicle approaching a stop sign at the entrance to an intersection shall stop at a limit line before proceeding.",stop sign,proceeding without stopping is an infraction,FALSE,min_stop_time=0.5 s,Lane Following;Intersection Handling,Turn Right;Turn Left
CVC-22358,state,California,2024-01-01,"A local authority may set a prima facie speed limit of 25 miles per hour on a highway contiguous to a school, for 500 to 1000 feet from the school grounds.",school zone,exceeding the school zone limit is an infraction,FALSE,max_speed=25 mph;zone_distance_min=500 ft;zone_distance_max=1000 ft,Lane Following;Intersection Handling;Overtaking,Lane Following;Intersection Handling;Overtaking
)csv";

inline RegulationDatabase bundled_database() {
  return parse_regulation_csv(kBundledRegulationsCsv, fsm::state_registry());
}

}  // namespace regnav::regdb
