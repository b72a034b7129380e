#pragma once

#include <vector>

#include "paa/solvers.hpp"

namespace paa {

// Runs config.restarts independent fits on streams 0..restarts-1 derived from
// config.seed and returns the report with the smallest final NLL; ties go to
// the smaller stream id.  Restarts may run concurrently on up to `jobs`
// threads; the result does not depend on jobs.  Fitter errors propagate only
// if every restart fails.
FitReport run_restarts(const DataMatrix& x, ModelKind kind,
                       const FitConfig& config, int jobs = 1);

struct ElbowPoint {
    int k = 0;
    double best_nll = 0.0;
    // Stream id of the winning restart; the value config.restarts denotes the
    // warm-start candidate seeded from the previous k's solution.
    std::uint64_t seed_of_best = 0;
    int restarts = 0;
};

struct ElbowCurve {
    std::vector<ElbowPoint> entries; // one per k, ascending
    // Heuristic suggestion only (largest perpendicular distance to the secant
    // through the endpoints); the choice of k stays with the caller.
    int suggested_index = 0;
};

// Best-of-restarts NLL for each k in [k_min, k_max].  Besides the random
// restarts, each k > k_min also tries a warm start that duplicates one
// archetype of the previous k's best model, which makes best_nll
// non-increasing in k by construction.
ElbowCurve elbow_curve(const DataMatrix& x, ModelKind kind, int k_min,
                       int k_max, const FitConfig& base_config, int jobs = 1);

} // namespace paa
