#pragma once

// Umbrella header for the allocation-probability testing toolkit.

#include "aptest/ap_test.hpp"
#include "aptest/calibration.hpp"
#include "aptest/comparators.hpp"
#include "aptest/config.hpp"
#include "aptest/core.hpp"
#include "aptest/harness.hpp"
#include "aptest/io.hpp"
#include "aptest/math.hpp"
#include "aptest/multiarm.hpp"
#include "aptest/parallel.hpp"
#include "aptest/policy.hpp"
#include "aptest/presets.hpp"
#include "aptest/random.hpp"
#include "aptest/rewards.hpp"
#include "aptest/scenario.hpp"
