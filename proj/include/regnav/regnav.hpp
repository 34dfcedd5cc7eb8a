#pragma once

// Everything in one include.

#include "regnav/units.hpp"
#include "regnav/geom.hpp"
#include "regnav/fsm.hpp"
#include "regnav/scene.hpp"
#include "regnav/regdb.hpp"
#include "regnav/bundled_regulations.hpp"
#include "regnav/cost.hpp"
#include "regnav/sim/world.hpp"
#include "regnav/sim/eventlog.hpp"
#include "regnav/sim/planner.hpp"
#include "regnav/sim/runner.hpp"
#include "regnav/sim/scenarios.hpp"
#include "regnav/sim/audit.hpp"
#include "regnav/sim/config.hpp"
#include "regnav/sim/plot.hpp"
#include "regnav/cli.hpp"
