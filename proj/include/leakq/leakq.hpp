#pragma once

#include "leakq/analytic.hpp"
#include "leakq/commands.hpp"
#include "leakq/dynamics.hpp"
#include "leakq/error.hpp"
#include "leakq/metrics.hpp"
#include "leakq/parallel.hpp"
#include "leakq/random.hpp"
#include "leakq/scenario.hpp"
#include "leakq/sim.hpp"
#include "leakq/sources.hpp"
#include "leakq/validate.hpp"
