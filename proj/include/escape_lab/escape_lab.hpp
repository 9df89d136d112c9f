#pragma once

// Numerical core; no third-party headers beyond Boost.Math.
#include "escape_lab/core.hpp"
#include "escape_lab/criteria_engine.hpp"
#include "escape_lab/escape_analysis.hpp"
#include "escape_lab/function_catalog.hpp"
#include "escape_lab/modulus_profiler.hpp"
#include "escape_lab/worker_pool.hpp"
