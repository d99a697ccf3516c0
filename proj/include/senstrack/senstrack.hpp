#pragma once

#include "senstrack/error.hpp"
#include "senstrack/model.hpp"
#include "senstrack/estimator.hpp"
#include "senstrack/cost.hpp"
#include "senstrack/quadrature.hpp"
#include "senstrack/grid.hpp"
#include "senstrack/dp.hpp"
#include "senstrack/wwlb.hpp"
#include "senstrack/strategy.hpp"
#include "senstrack/sim.hpp"
#include "senstrack/structure.hpp"
#include "senstrack/scenario_io.hpp"
#include "senstrack/csv.hpp"
