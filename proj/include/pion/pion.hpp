#pragma once

// Umbrella header for the library. The command-line layer (pion/cli.hpp)
// pulls in CLI11 and is not included here.

#include "pion/baselines.hpp"
#include "pion/config.hpp"
#include "pion/errors.hpp"
#include "pion/flops.hpp"
#include "pion/harness.hpp"
#include "pion/linalg.hpp"
#include "pion/manifold.hpp"
#include "pion/optim.hpp"
#include "pion/problems.hpp"
#include "pion/random.hpp"
#include "pion/selftest.hpp"
