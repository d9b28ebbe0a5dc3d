#pragma once

#include <Eigen/Dense>

#include "mmdsvr/dataset.hpp"
#include "mmdsvr/kernel.hpp"
#include "mmdsvr/model.hpp"
#include "mmdsvr/solver.hpp"

namespace mmdsvr {

/// Canonical epsilon-SVR hyperparameters.
struct SVRParams {
    double epsilon = 0.1;  ///< Tube radius, in target units.
    double c = 1.0;        ///< Penalty on slack outside the tube.
    KernelSpec kernel;
    SolverControls solver;

    void validate() const;
};

struct SvrSolution {
    Eigen::VectorXd alpha;
    Eigen::VectorXd alpha_star;
    SolveReport report;

    Eigen::VectorXd coefficients() const { return alpha - alpha_star; }
};

/// 1/2 (a - a*)' K (a - a*) - (a - a*)' y + eps * sum(a + a*)
double svr_dual_objective(const KernelRows& K, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& alpha_star, double epsilon);

/// Minimizes the epsilon-SVR dual over the box 0 <= a, a* <= C by cyclic
/// coordinate descent with clipped Newton steps. Each epoch visits the 2n
/// variables in a random order seeded from (seed, epoch).
SvrSolution solve_svr(const KernelRows& K, const Eigen::VectorXd& y, const SVRParams& p);

/// Trains on `d` as given (no normalization; the model stores the identity map).
/// Non-convergence is reported through Model::converged.
Model train_svr(const Dataset& d, const SVRParams& p, SolveReport* report = nullptr);

}  // namespace mmdsvr
