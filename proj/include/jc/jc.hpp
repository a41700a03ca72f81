#pragma once

// Umbrella header for the joint-consistency aggregation toolkit.

#include "jc/baselines.hpp"
#include "jc/errors.hpp"
#include "jc/field.hpp"
#include "jc/harness.hpp"
#include "jc/interaction.hpp"
#include "jc/judge.hpp"
#include "jc/pool_io.hpp"
#include "jc/prompts.hpp"
#include "jc/rng.hpp"
#include "jc/sim.hpp"
#include "jc/solver.hpp"
#include "jc/trace.hpp"
