#include "mmdsvr/svr.hpp"

#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mmdsvr/rng.hpp"

namespace mmdsvr {

void SolverControls::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
}

void SVRParams::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("eps must be >= 0");
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("C must be > 0");
    kernel.validate();
    solver.validate();
}

double svr_dual_objective(const KernelRows& K, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& alpha_star, double epsilon) {
    const Eigen::VectorXd c = alpha - alpha_star;
    return 0.5 * K.quadratic_form(c) - c.dot(y) + epsilon * (alpha.sum() + alpha_star.sum());
}

SvrSolution solve_svr(const KernelRows& K, const Eigen::VectorXd& y, const SVRParams& p) {
    p.validate();
    const std::size_t n = K.size();
    if (static_cast<std::size_t>(y.size()) != n) throw std::invalid_argument("target count does not match kernel size");

    SvrSolution sol;
    sol.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    sol.alpha_star = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));  // K (a - a*)

    // coordinates 0..n-1 are a_i, n..2n-1 are a*_i
    std::vector<std::size_t> order(2 * n);
    double objective = 0.0;
    double epoch_start = 0.0;
    auto& report = sol.report;

    for (int epoch = 0; epoch < p.solver.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(p.solver.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(std::span(order));

        double max_violation = 0.0;
        for (std::size_t coord : order) {
            const bool star = coord >= n;
            const std::size_t i = star ? coord - n : coord;
            const auto ii = static_cast<Eigen::Index>(i);
            double& v = star ? sol.alpha_star(ii) : sol.alpha(ii);
            // d/da = u - y + eps, d/da* = -u + y + eps
            const double g = star ? -u(ii) + y(ii) + p.epsilon : u(ii) - y(ii) + p.epsilon;
            max_violation = std::max(max_violation, projected_violation(v, g, 0.0, p.c));

            const double h = std::max(K.diag(i), kMinCurvature);
            const double updated = std::clamp(v - g / h, 0.0, p.c);
            const double step = updated - v;
            if (step == 0.0) continue;
            v = updated;
            const double dc = star ? -step : step;
            u += dc * K.row(i).vector();
            const double delta = g * step + 0.5 * K.diag(i) * step * step;
            assert(delta <= 1e-12 * std::max(1.0, std::abs(objective)));
            objective += delta;
        }
        report.epochs = epoch + 1;
        report.max_violation = max_violation;

        objective = svr_dual_objective(K, y, sol.alpha, sol.alpha_star, p.epsilon);
        if (objective > epoch_start + 1e-10 * std::max(1.0, std::abs(epoch_start))) report.monotone = false;
        epoch_start = objective;
        u = K.multiply(sol.coefficients());

        if (max_violation < p.solver.tolerance) {
            report.converged = true;
            break;
        }
    }
    report.objective = objective;
    return sol;
}

Model train_svr(const Dataset& d, const SVRParams& p, SolveReport* report) {
    d.validate();
    p.validate();
    const auto K = make_kernel_rows(p.kernel, d.instances);
    const auto sol = solve_svr(*K, d.targets, p);
    if (report) *report = sol.report;
    return make_model(Algorithm::svr, p.kernel, NormalizationParams::identity(d.dims()), d.instances,
                      sol.coefficients(), sol.report.converged);
}

}  // namespace mmdsvr
