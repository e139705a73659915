#pragma once

// Umbrella header for the SMILE two-stage estimator: sparse model
// identification (triple-penalized adaptive group LASSO on spline bases)
// followed by refitting, spline-backfitted local-linear estimation and
// simultaneous confidence bands.

#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/fit.hpp"
#include "smile/inference.hpp"
#include "smile/kernel.hpp"
#include "smile/pipeline.hpp"
#include "smile/rng.hpp"
#include "smile/simulate.hpp"
#include "smile/solver.hpp"
#include "smile/spline.hpp"
#include "smile/stats.hpp"
