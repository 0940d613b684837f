#pragma once

#include "ntal/error.hpp"
#include "ntal/rng.hpp"
#include "ntal/dataset.hpp"
#include "ntal/forest.hpp"
#include "ntal/uncertainty.hpp"
#include "ntal/lal.hpp"
#include "ntal/pool.hpp"
#include "ntal/strategies.hpp"
#include "ntal/engine.hpp"
#include "ntal/metrics.hpp"
#include "ntal/config.hpp"
#include "ntal/experiment.hpp"
#include "ntal/report.hpp"
