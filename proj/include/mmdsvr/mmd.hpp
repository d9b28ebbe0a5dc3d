#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "mmdsvr/dataset.hpp"
#include "mmdsvr/kernel.hpp"
#include "mmdsvr/model.hpp"
#include "mmdsvr/solver.hpp"

namespace mmdsvr {

/// Hyperparameters of maximal-margin-distribution SVR.
///
/// epsilon is the outer tube radius and (2 mu - 1) epsilon the inner radius of
/// the two margin belts; c1 penalizes leaving the tube, c2 scales the coupled
/// belt constraints.
struct MMDParams {
    double epsilon = 0.1;
    double mu = 0.5;
    double c1 = 1.0;
    double c2 = 1.0;
    KernelSpec kernel;
    SolverControls solver;
    double backtrack_ratio = 0.5;  ///< v in (0, 1]: rung k of the step ladder is v^k times the Newton step.
    int max_backtrack = 30;        ///< Last rung tried.

    void validate() const;
};

enum class DualVar { alpha, alpha_star, beta, beta_star, psi };

inline constexpr std::array<DualVar, 5> kDualVars = {DualVar::alpha, DualVar::alpha_star, DualVar::beta,
                                                     DualVar::beta_star, DualVar::psi};

std::string_view to_string(DualVar v);

/// The five dual vectors plus the cached expansion u = K c with
/// c = alpha - alpha* + beta - beta*.
///
/// Feasible set:
///   0 <= alpha_i, beta*_i <= C1
///   alpha*_i, beta_i, psi_i >= 0,  alpha*_i + psi_i <= C2,  beta_i + psi_i <= C2
struct DualState {
    Eigen::VectorXd alpha;
    Eigen::VectorXd alpha_star;
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_star;
    Eigen::VectorXd psi;
    Eigen::VectorXd u;
    double objective = 0.0;

    static DualState zero(std::size_t n);

    std::size_t size() const { return static_cast<std::size_t>(alpha.size()); }
    Eigen::VectorXd coefficients() const { return alpha - alpha_star + beta - beta_star; }

    Eigen::VectorXd& var(DualVar v);
    const Eigen::VectorXd& var(DualVar v) const;

    /// Largest constraint violation (0 when feasible).
    double infeasibility(double c1, double c2) const;
};

/// 1/2 c'Kc - c'y + (1/C2) sum_i (alpha*_i + psi_i)(beta_i + psi_i)
///   + (1 - 2 mu) eps sum_i (alpha*_i + beta_i + 2 psi_i)
/// Evaluated from scratch; does not read the cached u.
double dual_objective(const DualState& s, const KernelRows& K, const Eigen::VectorXd& y, const MMDParams& p);

/// Partial derivatives of dual_objective with respect to the five variables of
/// sample i, computed from the cached u.
struct Partials {
    double alpha;
    double alpha_star;
    double beta;
    double beta_star;
    double psi;

    double operator[](DualVar v) const;
};

Partials partials(const DualState& s, const Eigen::VectorXd& y, const MMDParams& p, std::size_t i);

/// Feasible interval of one variable with every other variable held fixed.
struct Interval {
    double lower;
    double upper;
};

Interval coordinate_bounds(const DualState& s, const MMDParams& p, std::size_t i, DualVar v);

/// Dual coordinate descent for the coupled-constraint MMD-SVR dual.
///
/// alpha and beta* take clipped Newton steps. alpha*, beta and psi have upper
/// bounds that move with the coupled variables, so they step along the ladder
/// old - t * v^k (k = 0, 1, ..., max_backtrack) and take the first rung that is
/// feasible; a rung below zero is clamped to zero. Every update keeps the state
/// feasible and never increases the objective.
class MmdSolver {
public:
    MmdSolver(const KernelRows& K, const Eigen::VectorXd& y, const MMDParams& p);

    const DualState& state() const { return state_; }
    const MMDParams& params() const { return params_; }

    /// Replaces the state; u and the objective are recomputed. Throws if infeasible.
    void set_state(DualState s);

    /// One coordinate update. Returns the projected-gradient violation the
    /// coordinate had before the update.
    double update(std::size_t i, DualVar v);
    double update_box_var(std::size_t i, DualVar which);      ///< alpha or beta*
    double update_coupled_var(std::size_t i, DualVar which);  ///< alpha* or beta
    double update_psi(std::size_t i);

    /// One pass over all 5n coordinates in the permutation for `epoch`.
    /// Returns the largest violation seen.
    double run_epoch(int epoch);

    /// Epochs until the violation drops below tolerance or max_epochs.
    /// When `trace` is set, writes `epoch,objective,max_violation` rows.
    SolveReport solve(std::ostream* trace = nullptr);

    double fresh_objective() const { return dual_objective(state_, K_, y_, params_); }
    /// |u - K c|_inf
    double cache_drift() const;

private:
    void apply_step(std::size_t i, DualVar v, double step, double g, double curvature);
    double ladder(double value, double newton_step, double upper) const;

    const KernelRows& K_;
    const Eigen::VectorXd& y_;
    MMDParams params_;
    DualState state_;
};

struct MmdSolution {
    DualState state;
    SolveReport report;
};

MmdSolution solve_mmd(const KernelRows& K, const Eigen::VectorXd& y, const MMDParams& p,
                      std::ostream* trace = nullptr);

/// Trains on `d` as given; coefficients are alpha - alpha* + beta - beta*, bias 0.
Model train_mmd(const Dataset& d, const MMDParams& p, SolveReport* report = nullptr,
                std::ostream* trace = nullptr);

struct MarginStats {
    double mean = 0.0;
    double variance = 0.0;
    bool degenerate = false;  ///< |w| = 0, statistics undefined.
};

/// Margin mean and variance of `m` on `d` (raw instances):
///   mean     = (1/n) sum_i |f(x_i) - y_i| / |w|
///   variance = (1/n) sum_{i,j} (|f(x_i) - y_i| - |f(x_j) - y_j|)^2 / |w|^2
/// with |w|^2 = c'Kc over the support instances.
MarginStats margin_stats(const Model& m, const Dataset& d);

}  // namespace mmdsvr
