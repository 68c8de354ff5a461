#pragma once

#include "grand/random.hpp"
#include "grand/packing.hpp"
#include "grand/state.hpp"
#include "grand/policy.hpp"
#include "grand/stats.hpp"
#include "grand/engine.hpp"
#include "grand/simplex.hpp"
#include "grand/fluid.hpp"
#include "grand/lyapunov.hpp"
#include "grand/harness.hpp"
