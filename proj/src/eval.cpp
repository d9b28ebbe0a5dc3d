#include "mmdsvr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "mmdsvr/rng.hpp"

namespace mmdsvr {

double lower_median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty sequence");
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

std::optional<double> r2(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size() || targets.empty())
        throw std::invalid_argument("r2 needs equal nonzero lengths");
    const double center = lower_median({targets.begin(), targets.end()});
    std::vector<double> spread(targets.size());
    std::vector<double> residual(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        spread[i] = std::abs(targets[i] - center);
        residual[i] = std::abs(targets[i] - predictions[i]);
    }
    const double mad = lower_median(std::move(spread));
    if (mad == 0.0) return std::nullopt;
    const double ratio = lower_median(std::move(residual)) / mad;
    return 1.0 - ratio * ratio;
}

KernelSpec HyperParams::kernel_spec(double delta) const {
    KernelSpec spec;
    spec.kind = kernel;
    spec.bias_augment = bias_augment;
    spec.width = kernel == KernelKind::rbf ? (width_relative ? width * delta : width) : 1.0;
    return spec;
}

SVRParams HyperParams::svr_params(double delta) const {
    SVRParams p;
    p.epsilon = epsilon;
    p.c = c;
    p.kernel = kernel_spec(delta);
    p.solver = solver;
    return p;
}

MMDParams HyperParams::mmd_params(double delta) const {
    MMDParams p;
    p.epsilon = epsilon;
    p.mu = mu;
    p.c1 = c1;
    p.c2 = c2;
    p.kernel = kernel_spec(delta);
    p.solver = solver;
    p.backtrack_ratio = backtrack_ratio;
    p.max_backtrack = max_backtrack;
    return p;
}

void HyperParams::validate() const {
    if (algorithm == Algorithm::svr)
        svr_params(1.0).validate();
    else
        mmd_params(1.0).validate();
}

double width_reference(const RowMatrix& normalized_train) {
    if (normalized_train.rows() < 2) return 1.0;
    const double delta = avg_pairwise_distance(normalized_train);
    return delta > 0.0 ? delta : 1.0;
}

namespace {

Eigen::VectorXd solve_coefficients(const KernelRows& K, const Eigen::VectorXd& y, const HyperParams& hp,
                                   double delta, bool& converged) {
    if (hp.algorithm == Algorithm::svr) {
        auto sol = solve_svr(K, y, hp.svr_params(delta));
        converged = sol.report.converged;
        return sol.coefficients();
    }
    auto sol = solve_mmd(K, y, hp.mmd_params(delta));
    converged = sol.report.converged;
    return sol.state.coefficients();
}

void summarize(CVResult& r) {
    std::vector<double> defined;
    r.n_undefined = 0;
    r.repeat_means.clear();
    for (std::size_t rep = 0; rep < r.repeats; ++rep) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t f = 0; f < r.folds; ++f) {
            const auto& s = r.scores[rep * r.folds + f];
            if (!s) {
                ++r.n_undefined;
                continue;
            }
            defined.push_back(*s);
            sum += *s;
            ++count;
        }
        if (count > 0) r.repeat_means.push_back(sum / static_cast<double>(count));
    }
    auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = sd = 0.0;
        if (v.empty()) {
            mean = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (v.size() < 2) return;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    mean_std(defined, r.mean, r.std);
    mean_std(r.repeat_means, r.repeat_mean, r.repeat_std);
}

/// Scores every point on the same splits. Kernel matrices are built once per
/// (split, kernel spec) and shared by all points that use them.
std::vector<CVResult> evaluate_points(const Dataset& d, std::span<const HyperParams> points, std::size_t folds,
                                      std::size_t repeats, std::uint64_t seed) {
    d.validate();
    if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    for (const auto& hp : points) hp.validate();

    std::vector<CVResult> results(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        results[p].params = points[p];
        results[p].folds = folds;
        results[p].repeats = repeats;
        results[p].scores.resize(folds * repeats);
    }

    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const auto splits = kfold_split(d.size(), folds, repeat_seed(seed, rep));
        for (std::size_t f = 0; f < folds; ++f) {
            const Dataset train = d.subset(splits[f].train);
            const Dataset test = d.subset(splits[f].test);
            const auto norm = fit_normalizer(train);
            const RowMatrix x_train = apply_normalizer(norm, train.instances);
            const RowMatrix x_test = apply_normalizer(norm, test.instances);
            const double delta = width_reference(x_train);

            std::map<std::tuple<int, double, bool>, std::vector<std::size_t>> groups;
            for (std::size_t p = 0; p < points.size(); ++p) {
                const auto spec = points[p].kernel_spec(delta);
                groups[{static_cast<int>(spec.kind), spec.width, spec.bias_augment}].push_back(p);
            }
            for (const auto& [key, members] : groups) {
                const auto spec = points[members.front()].kernel_spec(delta);
                const auto K = make_kernel_rows(spec, x_train);
                const Eigen::MatrixXd k_test = cross_kernel(spec, x_test, x_train);
                for (std::size_t p : members) {
                    bool converged = false;
                    const Eigen::VectorXd c = solve_coefficients(*K, train.targets, points[p], delta, converged);
                    if (!converged) ++results[p].non_converged;
                    const Eigen::VectorXd pred = k_test * c;
                    results[p].scores[rep * folds + f] =
                        r2({pred.data(), static_cast<std::size_t>(pred.size())},
                           {test.targets.data(), static_cast<std::size_t>(test.targets.size())});
                }
            }
        }
    }
    for (auto& r : results) summarize(r);
    return results;
}

}  // namespace

Model fit_model(const Dataset& train, const HyperParams& hp, SolveReport* report, std::ostream* trace) {
    hp.validate();
    const auto norm = fit_normalizer(train);
    const Dataset normalized = apply_normalizer(norm, train);
    const double delta = width_reference(normalized.instances);
    Model m = hp.algorithm == Algorithm::svr ? train_svr(normalized, hp.svr_params(delta), report)
                                             : train_mmd(normalized, hp.mmd_params(delta), report, trace);
    m.normalization = norm;
    return m;
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat) { return derive_seed(seed, repeat); }

CVResult cross_validate(const Dataset& d, const HyperParams& hp, std::size_t folds, std::size_t repeats,
                        std::uint64_t seed) {
    return evaluate_points(d, std::span(&hp, 1), folds, repeats, seed).front();
}

GridSpec GridSpec::defaults(Algorithm algo) {
    GridSpec g;
    g.epsilon = {0.01, 0.05, 0.1, 0.2};
    for (int k = -4; k <= 5; ++k) g.width.push_back(std::ldexp(1.0, k));
    if (algo == Algorithm::svr) {
        for (int k = 0; k <= 9; ++k) g.c.push_back(std::ldexp(1.0, k));
    } else {
        g.c1 = {5, 10, 15, 20, 25, 30};
        g.c2 = {5, 10, 15, 20, 25, 30};
        g.mu = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    }
    return g;
}

void GridSpec::validate(Algorithm algo) const {
    auto need = [](const std::vector<double>& v, const char* name) {
        if (v.empty()) throw std::invalid_argument(std::string("empty grid for ") + name);
    };
    need(epsilon, "eps");
    need(width, "width");
    if (algo == Algorithm::svr) {
        need(c, "C");
    } else {
        need(c1, "C1");
        need(c2, "C2");
        need(mu, "mu");
        for (double m : mu)
            if (!(m >= 0.5 && m <= 1.0)) throw std::invalid_argument("mu must be in [0.5,1]");
    }
}

std::vector<HyperParams> GridSpec::enumerate(const HyperParams& base) const {
    validate(base.algorithm);
    const std::vector<double> widths =
        base.kernel == KernelKind::linear ? std::vector<double>{width.front()} : width;
    std::vector<HyperParams> out;
    auto push_widths = [&](HyperParams hp) {
        for (double w : widths) {
            hp.width = w;
            out.push_back(hp);
        }
    };
    for (double eps : epsilon) {
        HyperParams hp = base;
        hp.epsilon = eps;
        if (base.algorithm == Algorithm::svr) {
            for (double cv : c) {
                hp.c = cv;
                push_widths(hp);
            }
        } else {
            for (double a : c1)
                for (double b : c2)
                    for (double m : mu) {
                        hp.c1 = a;
                        hp.c2 = b;
                        hp.mu = m;
                        push_widths(hp);
                    }
        }
    }
    return out;
}

GridResult grid_search(const Dataset& d, const GridSpec& grid, const HyperParams& base, std::size_t folds,
                       std::size_t repeats, std::uint64_t seed) {
    const auto points = grid.enumerate(base);
    if (points.empty()) throw std::invalid_argument("empty grid");
    GridResult out;
    out.rows = evaluate_points(d, points, folds, repeats, seed);
    out.best = 0;
    bool found = false;
    for (std::size_t p = 0; p < out.rows.size(); ++p) {
        const double m = out.rows[p].mean;
        if (std::isnan(m)) continue;
        if (!found || m > out.rows[out.best].mean) {
            out.best = p;
            found = true;
        }
    }
    return out;
}

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_grid_csv(std::ostream& out, const GridResult& g) {
    if (g.rows.empty()) return;
    const bool svr = g.rows.front().params.algorithm == Algorithm::svr;
    out << (svr ? "eps,c,width,mean,std,n_undefined\n" : "eps,c1,c2,mu,width,mean,std,n_undefined\n");
    for (const auto& r : g.rows) {
        const auto& p = r.params;
        out << fmt17(p.epsilon) << ',';
        if (svr)
            out << fmt17(p.c) << ',';
        else
            out << fmt17(p.c1) << ',' << fmt17(p.c2) << ',' << fmt17(p.mu) << ',';
        out << fmt17(p.width) << ',' << fmt17(r.mean) << ',' << fmt17(r.std) << ',' << r.n_undefined << '\n';
    }
}

void write_scores_csv(std::ostream& out, const CVResult& r) {
    out << "repeat,fold,r2\n";
    for (std::size_t rep = 0; rep < r.repeats; ++rep)
        for (std::size_t f = 0; f < r.folds; ++f) {
            const auto& s = r.scores[rep * r.folds + f];
            out << rep << ',' << f << ',' << (s ? fmt17(*s) : std::string()) << '\n';
        }
}

namespace {

struct CriticalRow {
    std::size_t df;
    double q90, q95, q99;
};

// two-sided Student-t quantiles
constexpr CriticalRow kCritical[] = {
    {1, 6.313752, 12.706205, 63.656741}, {2, 2.919986, 4.302653, 9.924843},  {3, 2.353363, 3.182446, 5.840909},
    {4, 2.131847, 2.776445, 4.604095},   {5, 2.015048, 2.570582, 4.032143},  {6, 1.943180, 2.446912, 3.707428},
    {7, 1.894579, 2.364624, 3.499483},   {8, 1.859548, 2.306004, 3.355387},  {9, 1.833113, 2.262157, 3.249836},
    {10, 1.812461, 2.228139, 3.169273},  {11, 1.795885, 2.200985, 3.105807}, {12, 1.782288, 2.178813, 3.054540},
    {13, 1.770933, 2.160369, 3.012276},  {14, 1.761310, 2.144787, 2.976843}, {15, 1.753050, 2.131450, 2.946713},
    {16, 1.745884, 2.119905, 2.920782},  {17, 1.739607, 2.109816, 2.898231}, {18, 1.734064, 2.100922, 2.878440},
    {19, 1.729133, 2.093024, 2.860935},  {20, 1.724718, 2.085963, 2.845340}, {21, 1.720743, 2.079614, 2.831360},
    {22, 1.717144, 2.073873, 2.818756},  {23, 1.713872, 2.068658, 2.807336}, {24, 1.710882, 2.063899, 2.796940},
    {25, 1.708141, 2.059539, 2.787436},  {26, 1.705618, 2.055529, 2.778715}, {27, 1.703288, 2.051831, 2.770683},
    {28, 1.701131, 2.048407, 2.763262},  {29, 1.699127, 2.045230, 2.756386}, {30, 1.697261, 2.042272, 2.749996},
    {40, 1.683851, 2.021075, 2.704459},  {45, 1.679427, 2.014103, 2.689585}, {49, 1.676551, 2.009575, 2.679952},
    {50, 1.675905, 2.008559, 2.677793},  {60, 1.670649, 2.000298, 2.660283}, {80, 1.664125, 1.990063, 2.638691},
    {99, 1.660391, 1.984217, 2.626405},  {100, 1.660234, 1.983972, 2.625891}, {120, 1.657651, 1.979930, 2.617421},
};

}  // namespace

double t_critical(std::size_t df, double level) {
    if (df < 1) throw std::invalid_argument("t test needs at least 1 degree of freedom");
    int column = -1;
    if (std::abs(level - 0.90) < 1e-12) column = 0;
    if (std::abs(level - 0.95) < 1e-12) column = 1;
    if (std::abs(level - 0.99) < 1e-12) column = 2;
    if (column < 0) throw std::invalid_argument("unsupported significance level (use 0.90, 0.95 or 0.99)");

    const CriticalRow* row = &kCritical[0];
    for (const auto& r : kCritical)
        if (r.df <= df) row = &r;
    return column == 0 ? row->q90 : column == 1 ? row->q95 : row->q99;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double level) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired t-test needs equal lengths >= 2");
    const std::size_t n = a.size();
    TTestResult out;
    out.df = n - 1;
    out.critical = t_critical(out.df, level);

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    out.mean_difference = mean;
    out.direction = mean > 0.0 ? Direction::a : mean < 0.0 ? Direction::b : Direction::none;

    if (sd == 0.0) {
        out.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
        out.significant = mean != 0.0;
        return out;
    }
    out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    out.significant = std::abs(out.t) > out.critical;
    return out;
}

}  // namespace mmdsvr
