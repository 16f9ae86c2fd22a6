#pragma once

#include "symbatch/analytic.hpp"
#include "symbatch/batching.hpp"
#include "symbatch/core/csv.hpp"
#include "symbatch/core/dataset.hpp"
#include "symbatch/core/error.hpp"
#include "symbatch/core/linalg.hpp"
#include "symbatch/core/rng.hpp"
#include "symbatch/harness/experiment.hpp"
#include "symbatch/harness/fit.hpp"
#include "symbatch/harness/minimizer.hpp"
#include "symbatch/harness/model_problem.hpp"
#include "symbatch/harness/parallel.hpp"
#include "symbatch/harness/results_io.hpp"
#include "symbatch/harness/stats.hpp"
#include "symbatch/objectives.hpp"
#include "symbatch/optimizers.hpp"
#include "symbatch/version.hpp"
