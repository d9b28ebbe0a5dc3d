// Helpers shared by the unit tests and the acceptance binary. Everything here
// is computed independently of the library code under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mmdsvr/dataset.hpp"
#include "mmdsvr/kernel.hpp"
#include "mmdsvr/mmd.hpp"
#include "mmdsvr/rng.hpp"

namespace testing_support {

using mmdsvr::DualState;
using mmdsvr::MMDParams;
using mmdsvr::Rng;
using mmdsvr::RowMatrix;

inline RowMatrix random_points(Rng& rng, std::size_t n, std::size_t d) {
    RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    return x;
}

/// Dense RBF Gram matrix with the +1 bias term, written out directly.
inline Eigen::MatrixXd rbf_gram(const RowMatrix& x, double width, bool augment = true) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d2 = (x.row(i) - x.row(j)).squaredNorm();
            k(i, j) = std::exp(-d2 / (2.0 * width * width)) + (augment ? 1.0 : 0.0);
        }
    return k;
}

struct Problem {
    Eigen::MatrixXd k;
    Eigen::VectorXd y;
    MMDParams params;
};

/// Random MMD problem: RBF kernel on random points, random targets and
/// hyperparameters. eps stays below 0.45.
inline Problem random_problem(Rng& rng, std::size_t n) {
    Problem p;
    const auto x = random_points(rng, n, 1 + rng.index(3));
    p.k = rbf_gram(x, rng.uniform(0.2, 2.0));
    p.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < p.y.size(); ++i) p.y(i) = rng.uniform(-1.5, 1.5);
    p.params.epsilon = rng.uniform(0.0, 0.45);
    p.params.mu = rng.uniform(0.5, 1.0);
    p.params.c1 = rng.uniform(0.1, 10.0);
    p.params.c2 = rng.uniform(0.1, 10.0);
    return p;
}

/// Uniformly random point of the feasible set (psi first, then the coupled pair).
inline DualState random_feasible_state(Rng& rng, std::size_t n, double c1, double c2) {
    DualState s = DualState::zero(n);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        s.alpha(i) = rng.uniform(0.0, c1);
        s.beta_star(i) = rng.uniform(0.0, c1);
        s.psi(i) = rng.uniform(0.0, c2);
        s.alpha_star(i) = rng.uniform(0.0, c2 - s.psi(i));
        s.beta(i) = rng.uniform(0.0, c2 - s.psi(i));
    }
    return s;
}

/// Term-by-term evaluation of the MMD dual objective with explicit loops.
inline double objective_by_terms(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, const DualState& s,
                                 const MMDParams& p) {
    const Eigen::Index n = y.size();
    std::vector<double> c(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        c[static_cast<std::size_t>(i)] = s.alpha(i) - s.alpha_star(i) + s.beta(i) - s.beta_star(i);
    double quad = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            quad += c[static_cast<std::size_t>(i)] * k(i, j) * c[static_cast<std::size_t>(j)];
    double lin = 0.0;
    double cross = 0.0;
    double belt = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        lin += c[static_cast<std::size_t>(i)] * y(i);
        cross += (s.alpha_star(i) + s.psi(i)) * (s.beta(i) + s.psi(i));
        belt += s.alpha_star(i) + s.beta(i) + 2.0 * s.psi(i);
    }
    return 0.5 * quad - lin + cross / p.c2 + (1.0 - 2.0 * p.mu) * p.epsilon * belt;
}

/// Stacked variables z = (alpha, alpha*, beta, beta*, psi).
inline Eigen::VectorXd stack(const DualState& s) {
    const Eigen::Index n = s.alpha.size();
    Eigen::VectorXd z(5 * n);
    z << s.alpha, s.alpha_star, s.beta, s.beta_star, s.psi;
    return z;
}

inline DualState unstack(const Eigen::VectorXd& z) {
    const Eigen::Index n = z.size() / 5;
    DualState s = DualState::zero(static_cast<std::size_t>(n));
    s.alpha = z.segment(0, n);
    s.alpha_star = z.segment(n, n);
    s.beta = z.segment(2 * n, n);
    s.beta_star = z.segment(3 * n, n);
    s.psi = z.segment(4 * n, n);
    return s;
}

/// Objective as 1/2 z'Hz + q'z over the stacked variables.
struct QuadraticForm {
    Eigen::MatrixXd h;
    Eigen::VectorXd q;

    double value(const Eigen::VectorXd& z) const { return 0.5 * z.dot(h * z) + q.dot(z); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& z) const { return h * z + q; }
};

inline QuadraticForm stacked_form(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, const MMDParams& p) {
    const Eigen::Index n = y.size();
    // c = A z with blocks (+I, -I, +I, -I, 0)
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, 5 * n);
    a.block(0, 0, n, n).setIdentity();
    a.block(0, n, n, n) = -Eigen::MatrixXd::Identity(n, n);
    a.block(0, 2 * n, n, n).setIdentity();
    a.block(0, 3 * n, n, n) = -Eigen::MatrixXd::Identity(n, n);

    QuadraticForm f;
    f.h = a.transpose() * k * a;
    f.q = -a.transpose() * y;
    const double w = 1.0 / p.c2;
    const double b = (1.0 - 2.0 * p.mu) * p.epsilon;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index as = n + i, be = 2 * n + i, ps = 4 * n + i;
        // (a + p)(b + p) = ab + ap + bp + p^2
        f.h(as, be) += w;
        f.h(be, as) += w;
        f.h(as, ps) += w;
        f.h(ps, as) += w;
        f.h(be, ps) += w;
        f.h(ps, be) += w;
        f.h(ps, ps) += 2.0 * w;
        f.q(as) += b;
        f.q(be) += b;
        f.q(ps) += 2.0 * b;
    }
    return f;
}

/// Smallest and largest eigenvalue of the stacked Hessian.
inline std::pair<double, double> hessian_spectrum(const QuadraticForm& f) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.h, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

/// Euclidean projection of (a0, b0, p0) onto {a, b, p >= 0, a + p <= c2, b + p <= c2}.
/// For fixed p the optimal a, b are clamps, which leaves a convex piecewise
/// quadratic in p with breakpoints at c2 - a0 and c2 - b0. Each piece is
/// minimized in closed form.
inline void project_triple(double& a0, double& b0, double& p0, double c2) {
    auto cost = [&](double p, double& a, double& b) {
        a = std::clamp(a0, 0.0, c2 - p);
        b = std::clamp(b0, 0.0, c2 - p);
        return (a - a0) * (a - a0) + (b - b0) * (b - b0) + (p - p0) * (p - p0);
    };
    std::vector<double> knots{0.0, c2};
    for (double x : {a0, b0})
        if (c2 - x > 0.0 && c2 - x < c2) knots.push_back(c2 - x);
    std::sort(knots.begin(), knots.end());

    double best_p = 0.0, best = std::numeric_limits<double>::infinity(), a = 0.0, b = 0.0;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        const double lo = knots[s], hi = knots[s + 1], mid = 0.5 * (lo + hi);
        // on this piece, x contributes (p - (c2 - x))^2 when x > c2 - p
        double sum = p0;
        int count = 1;
        for (double x : {a0, b0})
            if (x > c2 - mid) {
                sum += c2 - x;
                ++count;
            }
        const double p = std::clamp(sum / count, lo, hi);
        const double v = cost(p, a, b);
        if (v < best) {
            best = v;
            best_p = p;
        }
    }
    cost(best_p, a, b);
    a0 = a;
    b0 = b;
    p0 = best_p;
}

inline Eigen::VectorXd project(Eigen::VectorXd z, double c1, double c2) {
    const Eigen::Index n = z.size() / 5;
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = std::clamp(z(i), 0.0, c1);
        z(3 * n + i) = std::clamp(z(3 * n + i), 0.0, c1);
        project_triple(z(n + i), z(2 * n + i), z(4 * n + i), c2);
    }
    return z;
}

struct OracleResult {
    Eigen::VectorXd z;
    double objective = 0.0;
    long iterations = 0;
    bool converged = false;
};

/// Plain projected gradient, step 1/L with L the largest Hessian eigenvalue.
/// Monotone even on indefinite problems. Stops when the gradient-mapping
/// step is below `tol`.
inline OracleResult projected_gradient(const QuadraticForm& f, double c1, double c2, double tol = 1e-9,
                                       long max_iterations = 5'000'000) {
    const double lipschitz = std::max(hessian_spectrum(f).second, 1e-12);
    const double step = 1.0 / lipschitz;
    OracleResult r;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(f.q.size());
    for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
        const Eigen::VectorXd next = project(z - step * f.gradient(z), c1, c2);
        const bool done = (next - z).lpNorm<Eigen::Infinity>() < tol;
        z = next;
        if (done) {
            r.converged = true;
            break;
        }
    }
    r.z = z;
    r.objective = f.value(z);
    return r;
}

/// Global minimum when c1 >= c2. Then every c_i in [-(c1+c2), c1+c2] is reachable
/// and the best split of a c_i over the five variables always costs
/// (1 - 2 mu) eps c2, so the problem is a convex box QP in c alone.
inline double reduced_optimum(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, const MMDParams& p,
                              double tol = 1e-12) {
    const double box = p.c1 + p.c2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    const double step = 1.0 / std::max(es.eigenvalues().maxCoeff(), 1e-12);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(y.size());
    for (long it = 0; it < 20'000'000; ++it) {
        const Eigen::VectorXd next = (c - step * (k * c - y)).cwiseMax(-box).cwiseMin(box);
        const bool done = (next - c).lpNorm<Eigen::Infinity>() < tol;
        c = next;
        if (done) break;
    }
    return 0.5 * c.dot(k * c) - c.dot(y) +
           static_cast<double>(y.size()) * (1.0 - 2.0 * p.mu) * p.epsilon * p.c2;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::path(MMDSVR_TEST_TMP) / name;
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
