#include "mmdsvr/mmd.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmdsvr/rng.hpp"

namespace mmdsvr {

void MMDParams::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("eps must be >= 0");
    if (!(mu >= 0.5 && mu <= 1.0)) throw std::invalid_argument("mu must be in [0.5,1]");
    if (!(c1 > 0.0) || !std::isfinite(c1)) throw std::invalid_argument("C1 must be > 0");
    if (!(c2 > 0.0) || !std::isfinite(c2)) throw std::invalid_argument("C2 must be > 0");
    if (!(backtrack_ratio > 0.0 && backtrack_ratio <= 1.0))
        throw std::invalid_argument("backtracking ratio must be in (0,1]");
    if (max_backtrack < 1) throw std::invalid_argument("max backtracking exponent must be >= 1");
    kernel.validate();
    solver.validate();
}

std::string_view to_string(DualVar v) {
    switch (v) {
        case DualVar::alpha: return "alpha";
        case DualVar::alpha_star: return "alpha*";
        case DualVar::beta: return "beta";
        case DualVar::beta_star: return "beta*";
        case DualVar::psi: return "psi";
    }
    return "?";
}

DualState DualState::zero(std::size_t n) {
    const auto z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    return {z, z, z, z, z, z, 0.0};
}

Eigen::VectorXd& DualState::var(DualVar v) {
    return const_cast<Eigen::VectorXd&>(std::as_const(*this).var(v));
}

const Eigen::VectorXd& DualState::var(DualVar v) const {
    switch (v) {
        case DualVar::alpha: return alpha;
        case DualVar::alpha_star: return alpha_star;
        case DualVar::beta: return beta;
        case DualVar::beta_star: return beta_star;
        case DualVar::psi: return psi;
    }
    throw std::invalid_argument("bad dual variable");
}

double DualState::infeasibility(double c1, double c2) const {
    double worst = 0.0;
    auto below = [&](double v, double bound) { worst = std::max(worst, bound - v); };
    auto above = [&](double v, double bound) { worst = std::max(worst, v - bound); };
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        below(alpha(i), 0.0);
        above(alpha(i), c1);
        below(beta_star(i), 0.0);
        above(beta_star(i), c1);
        below(alpha_star(i), 0.0);
        below(beta(i), 0.0);
        below(psi(i), 0.0);
        above(alpha_star(i) + psi(i), c2);
        above(beta(i) + psi(i), c2);
    }
    return worst;
}

double dual_objective(const DualState& s, const KernelRows& K, const Eigen::VectorXd& y, const MMDParams& p) {
    const Eigen::VectorXd c = s.coefficients();
    const double coupling = ((s.alpha_star + s.psi).array() * (s.beta + s.psi).array()).sum() / p.c2;
    const double belt = (1.0 - 2.0 * p.mu) * p.epsilon * (s.alpha_star.sum() + s.beta.sum() + 2.0 * s.psi.sum());
    return 0.5 * K.quadratic_form(c) - c.dot(y) + coupling + belt;
}

double Partials::operator[](DualVar v) const {
    switch (v) {
        case DualVar::alpha: return alpha;
        case DualVar::alpha_star: return alpha_star;
        case DualVar::beta: return beta;
        case DualVar::beta_star: return beta_star;
        case DualVar::psi: return psi;
    }
    throw std::invalid_argument("bad dual variable");
}

Partials partials(const DualState& s, const Eigen::VectorXd& y, const MMDParams& p, std::size_t i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double residual = s.u(k) - y(k);
    const double belt = (1.0 - 2.0 * p.mu) * p.epsilon;
    return {
        residual,
        -residual + (s.beta(k) + s.psi(k)) / p.c2 + belt,
        residual + (s.alpha_star(k) + s.psi(k)) / p.c2 + belt,
        -residual,
        (s.alpha_star(k) + s.beta(k) + 2.0 * s.psi(k)) / p.c2 + 2.0 * belt,
    };
}

Interval coordinate_bounds(const DualState& s, const MMDParams& p, std::size_t i, DualVar v) {
    const auto k = static_cast<Eigen::Index>(i);
    switch (v) {
        case DualVar::alpha:
        case DualVar::beta_star: return {0.0, p.c1};
        case DualVar::alpha_star:
        case DualVar::beta: return {0.0, p.c2 - s.psi(k)};
        case DualVar::psi: return {0.0, p.c2 - std::max(s.alpha_star(k), s.beta(k))};
    }
    throw std::invalid_argument("bad dual variable");
}

MmdSolver::MmdSolver(const KernelRows& K, const Eigen::VectorXd& y, const MMDParams& p)
    : K_(K), y_(y), params_(p), state_(DualState::zero(K.size())) {
    params_.validate();
    if (static_cast<std::size_t>(y.size()) != K.size())
        throw std::invalid_argument("target count does not match kernel size");
}

void MmdSolver::set_state(DualState s) {
    if (s.size() != K_.size()) throw std::invalid_argument("state size does not match kernel size");
    if (s.infeasibility(params_.c1, params_.c2) > 0.0) throw std::invalid_argument("infeasible dual state");
    s.u = K_.multiply(s.coefficients());
    s.objective = dual_objective(s, K_, y_, params_);
    state_ = std::move(s);
}

double MmdSolver::cache_drift() const {
    return (state_.u - K_.multiply(state_.coefficients())).lpNorm<Eigen::Infinity>();
}

double MmdSolver::ladder(double value, double newton_step, double upper) const {
    double scale = 1.0;
    for (int k = 0; k <= params_.max_backtrack; ++k) {
        const double candidate = value - newton_step * scale;
        if (candidate < 0.0) return 0.0;
        if (candidate <= upper) return candidate;
        scale *= params_.backtrack_ratio;
    }
    return value;
}

void MmdSolver::apply_step(std::size_t i, DualVar v, double step, double g, double curvature) {
    const auto k = static_cast<Eigen::Index>(i);
    state_.var(v)(k) += step;
    double dc = 0.0;
    switch (v) {
        case DualVar::alpha:
        case DualVar::beta: dc = step; break;
        case DualVar::alpha_star:
        case DualVar::beta_star: dc = -step; break;
        case DualVar::psi: break;
    }
    if (dc != 0.0) state_.u += dc * K_.row(i).vector();
    // exact change of the objective along one coordinate (it is quadratic in each)
    const double delta = g * step + 0.5 * curvature * step * step;
    assert(delta <= 1e-12 * std::max(1.0, std::abs(state_.objective)));
    state_.objective += delta;
}

double MmdSolver::update_box_var(std::size_t i, DualVar which) {
    if (which != DualVar::alpha && which != DualVar::beta_star)
        throw std::invalid_argument("update_box_var handles alpha and beta* only");
    const auto k = static_cast<Eigen::Index>(i);
    const double g = partials(state_, y_, params_, i)[which];
    const double old = state_.var(which)(k);
    const double violation = projected_violation(old, g, 0.0, params_.c1);
    if (g == 0.0) return violation;

    const double kii = K_.diag(i);
    const double updated = std::clamp(old - g / std::max(kii, kMinCurvature), 0.0, params_.c1);
    if (updated != old) apply_step(i, which, updated - old, g, kii);
    return violation;
}

double MmdSolver::update_coupled_var(std::size_t i, DualVar which) {
    if (which != DualVar::alpha_star && which != DualVar::beta)
        throw std::invalid_argument("update_coupled_var handles alpha* and beta only");
    const auto k = static_cast<Eigen::Index>(i);
    const double g = partials(state_, y_, params_, i)[which];
    const double old = state_.var(which)(k);
    const double upper = params_.c2 - state_.psi(k);
    const double violation = projected_violation(old, g, 0.0, upper);
    if (g == 0.0) return violation;

    const double kii = K_.diag(i);
    const double updated = ladder(old, g / std::max(kii, kMinCurvature), upper);
    if (updated != old) apply_step(i, which, updated - old, g, kii);
    return violation;
}

double MmdSolver::update_psi(std::size_t i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double g = partials(state_, y_, params_, i).psi;
    const double old = state_.psi(k);
    const double upper = params_.c2 - std::max(state_.alpha_star(k), state_.beta(k));
    const double violation = projected_violation(old, g, 0.0, upper);
    if (g == 0.0) return violation;

    // second derivative in psi is 2 / C2
    const double curvature = 2.0 / params_.c2;
    const double updated = ladder(old, g / curvature, upper);
    if (updated != old) apply_step(i, DualVar::psi, updated - old, g, curvature);
    return violation;
}

double MmdSolver::update(std::size_t i, DualVar v) {
    switch (v) {
        case DualVar::alpha:
        case DualVar::beta_star: return update_box_var(i, v);
        case DualVar::alpha_star:
        case DualVar::beta: return update_coupled_var(i, v);
        case DualVar::psi: return update_psi(i);
    }
    throw std::invalid_argument("bad dual variable");
}

double MmdSolver::run_epoch(int epoch) {
    const std::size_t n = K_.size();
    std::vector<std::size_t> order(5 * n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(params_.solver.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span(order));

    double max_violation = 0.0;
    for (std::size_t coord : order)
        max_violation = std::max(max_violation, update(coord % n, kDualVars[coord / n]));
    return max_violation;
}

SolveReport MmdSolver::solve(std::ostream* trace) {
    constexpr int kResyncEvery = 50;
    SolveReport report;
    if (trace) *trace << "epoch,objective,max_violation\n";
    double epoch_start = fresh_objective();
    state_.objective = epoch_start;

    for (int epoch = 0; epoch < params_.solver.max_epochs; ++epoch) {
        const double violation = run_epoch(epoch);
        report.epochs = epoch + 1;
        report.max_violation = violation;

        if ((epoch + 1) % kResyncEvery == 0) state_.u = K_.multiply(state_.coefficients());
        state_.objective = fresh_objective();
        if (state_.objective > epoch_start + 1e-10 * std::max(1.0, std::abs(epoch_start)))
            report.monotone = false;
        epoch_start = state_.objective;

        if (trace) {
            char line[96];
            std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", epoch + 1, state_.objective, violation);
            *trace << line;
        }
        if (violation < params_.solver.tolerance) {
            report.converged = true;
            break;
        }
    }
    report.objective = state_.objective;
    return report;
}

MmdSolution solve_mmd(const KernelRows& K, const Eigen::VectorXd& y, const MMDParams& p, std::ostream* trace) {
    MmdSolver solver(K, y, p);
    auto report = solver.solve(trace);
    return {solver.state(), report};
}

Model train_mmd(const Dataset& d, const MMDParams& p, SolveReport* report, std::ostream* trace) {
    d.validate();
    p.validate();
    const auto K = make_kernel_rows(p.kernel, d.instances);
    const auto sol = solve_mmd(*K, d.targets, p, trace);
    if (report) *report = sol.report;
    return make_model(Algorithm::mmd, p.kernel, NormalizationParams::identity(d.dims()), d.instances,
                      sol.state.coefficients(), sol.report.converged);
}

MarginStats margin_stats(const Model& m, const Dataset& d) {
    d.validate();
    MarginStats out;
    double norm_sq = 0.0;
    if (m.support_size() > 0) norm_sq = m.coefficients.dot(gram(m.kernel, m.support).values * m.coefficients);
    if (!(norm_sq > 0.0)) {
        out.degenerate = true;
        return out;
    }
    const Eigen::VectorXd residual = (m.predict(d.instances) - d.targets).cwiseAbs();
    const double n = static_cast<double>(d.size());
    const double norm = std::sqrt(norm_sq);
    out.mean = residual.sum() / n / norm;
    // sum over ordered pairs (r_i - r_j)^2 = 2 n sum_i (r_i - mean r)^2
    const double centered = (residual.array() - residual.mean()).square().sum();
    out.variance = 2.0 * centered / norm_sq;
    return out;
}

}  // namespace mmdsvr
