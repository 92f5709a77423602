#pragma once

#include "fmdp/agents.hpp"
#include "fmdp/confidence.hpp"
#include "fmdp/core.hpp"
#include "fmdp/environments.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/harness.hpp"
#include "fmdp/model_io.hpp"
#include "fmdp/oracles.hpp"
#include "fmdp/planning.hpp"
#include "fmdp/rng.hpp"
#include "fmdp/verification.hpp"
