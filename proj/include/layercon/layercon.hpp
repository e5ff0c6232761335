#pragma once

#include "layercon/core.hpp"
#include "layercon/linalg.hpp"
#include "layercon/lp.hpp"
#include "layercon/qp.hpp"
#include "layercon/sdp.hpp"
#include "layercon/systems.hpp"
#include "layercon/simfunc.hpp"
#include "layercon/polytope.hpp"
#include "layercon/propagation.hpp"
#include "layercon/planner.hpp"
#include "layercon/problem.hpp"
#include "layercon/sim.hpp"
#include "layercon/scenario.hpp"
#include "layercon/report.hpp"
#include "layercon/svg.hpp"
