#pragma once

#include "bracket_steer/error.hpp"
#include "bracket_steer/system.hpp"
#include "bracket_steer/synthesis.hpp"
#include "bracket_steer/simulation.hpp"
#include "bracket_steer/multiagent.hpp"
#include "bracket_steer/scenarios.hpp"
