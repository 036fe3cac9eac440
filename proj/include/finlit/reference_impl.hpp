#pragma once

#include "finlit/dataset.hpp"
#include "finlit/matching.hpp"
#include "finlit/weighting.hpp"

namespace finlit::ref {

// Serial reference implementations of the OpenMP kernels. Kept for the
// equality tests and the benchmark target; not used on the hot paths.

// Rank-based Mahalanobis distance matrix, single straight-line loop.
DistanceMatrix robust_mahalanobis(const Dataset& ds);

// Resampling bootstrap with per-replicate propensity refit, serial loop.
double bootstrap_variance_ht(const Dataset& ds, const WeightingConfig& cfg);
double bootstrap_variance_hajek(const Dataset& ds, const WeightingConfig& cfg);

}  // namespace finlit::ref
