#pragma once

#include "crowdconf/aggregation.hpp"
#include "crowdconf/baselines.hpp"
#include "crowdconf/core.hpp"
#include "crowdconf/diff3.hpp"
#include "crowdconf/diffgen.hpp"
#include "crowdconf/extensions.hpp"
#include "crowdconf/io.hpp"
#include "crowdconf/parallel.hpp"
#include "crowdconf/random.hpp"
#include "crowdconf/simulator.hpp"
#include "crowdconf/stats.hpp"
