#pragma once

#include "flock/cost.hpp"
#include "flock/errors.hpp"
#include "flock/experiments.hpp"
#include "flock/model.hpp"
#include "flock/oracle.hpp"
#include "flock/protocol.hpp"
#include "flock/regularize.hpp"
#include "flock/rng.hpp"
#include "flock/scenarios.hpp"
#include "flock/serialize.hpp"
#include "flock/stats.hpp"
