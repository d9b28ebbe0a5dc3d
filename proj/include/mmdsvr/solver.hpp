#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace mmdsvr {

struct SolverControls {
    double tolerance = 1e-6;  ///< Stop when the largest projected-gradient violation of an epoch falls below this.
    int max_epochs = 1000;
    std::uint64_t seed = 1;   ///< Seeds the per-epoch coordinate permutations.

    void validate() const;
};

struct SolveReport {
    bool converged = false;
    int epochs = 0;
    double objective = 0.0;
    double max_violation = 0.0;  ///< Largest violation seen during the last epoch.
    bool monotone = true;        ///< False if an epoch ended with a higher objective than it started.
};

/// Floor for one-dimensional Newton denominators (zero instances under a
/// linear kernel without augmentation have K_ii = 0).
inline constexpr double kMinCurvature = 1e-12;

/// Optimality measure for a variable v in [lo, hi] with partial derivative g:
/// the length of the projected gradient step, |v - clamp(v - g, lo, hi)|.
/// At a bound it counts only the component pointing into the feasible set and
/// in the interior it equals |g| unless the bound is closer than |g|.
inline double projected_violation(double v, double g, double lo, double hi) {
    hi = std::max(hi, lo);
    return std::abs(v - std::clamp(v - g, lo, hi));
}

}  // namespace mmdsvr
