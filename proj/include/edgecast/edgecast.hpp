#pragma once

#include "edgecast/common.hpp"
#include "edgecast/lstm.hpp"
#include "edgecast/metrics.hpp"
#include "edgecast/model_io.hpp"
#include "edgecast/planner.hpp"
#include "edgecast/preprocess.hpp"
#include "edgecast/simulator.hpp"
#include "edgecast/trace.hpp"
