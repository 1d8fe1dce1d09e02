#pragma once

#include "classim/errors.hpp"
#include "classim/format.hpp"
#include "classim/io.hpp"
#include "classim/linalg.hpp"
#include "classim/lp.hpp"
#include "classim/measurements.hpp"
#include "classim/model_search.hpp"
#include "classim/nondisturbance.hpp"
#include "classim/parallel.hpp"
#include "classim/random.hpp"
#include "classim/sdp.hpp"
#include "classim/strategy.hpp"
#include "classim/thresholds.hpp"
#include "classim/witness.hpp"
