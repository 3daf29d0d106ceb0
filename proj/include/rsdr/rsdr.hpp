#pragma once

// Umbrella header for the rSDR library: robust sufficient dimension
// reduction by alpha-distance-covariance ascent on the Stiefel manifold,
// plus the companion outlier detector and simulation harness.

#include "rsdr/csv.hpp"
#include "rsdr/dataset.hpp"
#include "rsdr/dcov.hpp"
#include "rsdr/errors.hpp"
#include "rsdr/estimator.hpp"
#include "rsdr/outlier.hpp"
#include "rsdr/rng.hpp"
#include "rsdr/run.hpp"
#include "rsdr/serialize.hpp"
#include "rsdr/simulate.hpp"
#include "rsdr/stiefel.hpp"
