// Acceptance checks 1-9. Prints one PASS/FAIL line per check and exits
// nonzero if any fails. Run a subset by passing check numbers as arguments.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmdsvr/cli.hpp"
#include "mmdsvr/eval.hpp"
#include "mmdsvr/mmd.hpp"
#include "mmdsvr/model.hpp"
#include "mmdsvr/svr.hpp"
#include "support.hpp"

using namespace mmdsvr;
namespace ts = testing_support;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1. analytic partials against central differences of a loop-based objective
Outcome gradients() {
    Rng rng(101);
    const double h = 1e-6;
    double worst = 0.0;
    int states = 0;
    long checks = 0;
    for (; states < 120; ++states) {
        const std::size_t n = 3 + rng.index(18);
        const auto prob = ts::random_problem(rng, n);
        DenseKernelRows K(prob.k);
        MmdSolver solver(K, prob.y, prob.params);
        solver.set_state(ts::random_feasible_state(rng, n, prob.params.c1, prob.params.c2));  // fills Kc
        const DualState& s = solver.state();
        for (std::size_t i = 0; i < n; ++i) {
            const auto g = partials(s, prob.y, prob.params, i);
            for (auto v : kDualVars) {
                DualState plus = s, minus = s;
                plus.var(v)(static_cast<Eigen::Index>(i)) += h;
                minus.var(v)(static_cast<Eigen::Index>(i)) -= h;
                const double fd = (ts::objective_by_terms(prob.k, prob.y, plus, prob.params) -
                                   ts::objective_by_terms(prob.k, prob.y, minus, prob.params)) /
                                  (2 * h);
                worst = std::max(worst, std::abs(g[v] - fd) / std::max(1.0, std::abs(g[v])));
                ++checks;
            }
        }
    }
    return {worst <= 1e-5, std::to_string(states) + " states, " + std::to_string(checks) +
                               " partials, worst relative error " + fmt("%.2e", worst)};
}

// 2 and 3 share one corpus of random updates.
struct UpdateCorpus {
    long updates = 0;
    double worst_slack = 0.0;
    double worst_rise = 0.0;  // relative
};

const UpdateCorpus& update_corpus() {
    static const UpdateCorpus corpus = [] {
        UpdateCorpus c;
        Rng rng(202);
        while (c.updates < 120000) {
            const std::size_t n = 2 + rng.index(30);
            const auto prob = ts::random_problem(rng, n);
            DenseKernelRows K(prob.k);
            MmdSolver solver(K, prob.y, prob.params);
            if (rng.uniform() < 0.5) solver.set_state(ts::random_feasible_state(rng, n, prob.params.c1, prob.params.c2));
            double before = solver.fresh_objective();
            for (std::size_t k = 0; k < 40 * n; ++k) {
                solver.update(rng.index(n), kDualVars[rng.index(5)]);
                ++c.updates;
                c.worst_slack = std::max(c.worst_slack, solver.state().infeasibility(prob.params.c1, prob.params.c2));
                const double after = solver.fresh_objective();
                if (after > before) {
                    const double rel = before == 0.0 ? std::numeric_limits<double>::infinity()
                                                     : (after - before) / std::abs(before);
                    c.worst_rise = std::max(c.worst_rise, rel);
                }
                before = after;
            }
        }
        return c;
    }();
    return corpus;
}

Outcome feasibility() {
    const auto& c = update_corpus();
    return {c.worst_slack <= 1e-12,
            std::to_string(c.updates) + " updates, worst constraint slack " + fmt("%.2e", c.worst_slack)};
}

Outcome descent() {
    const auto& c = update_corpus();
    return {c.worst_rise <= 1e-10,
            std::to_string(c.updates) + " updates, worst relative rise " + fmt("%.2e", c.worst_rise)};
}

// 4. converged coordinate descent against projected gradient on small random instances
Outcome oracle() {
    Rng rng(404);
    int unconverged = 0, beyond = 0;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const std::size_t n = 2 + rng.index(5);
        auto prob = ts::random_problem(rng, n);
        const auto form = ts::stacked_form(prob.k, prob.y, prob.params);
        const auto ref = ts::projected_gradient(form, prob.params.c1, prob.params.c2, 1e-9);
        if (!ref.converged) ++unconverged;
        prob.params.solver.tolerance = 1e-9;
        prob.params.solver.max_epochs = 200000;
        DenseKernelRows K(prob.k);
        const auto sol = solve_mmd(K, prob.y, prob.params);
        if (!sol.report.converged) ++unconverged;
        const double gap = std::abs(sol.report.objective - ref.objective);
        if (gap > 1e-3) ++beyond;
        worst = std::max(worst, gap);
    }
    return {worst <= 1e-3 && unconverged == 0,
            "50 instances, " + std::to_string(unconverged) + " unconverged, " + std::to_string(beyond) +
                " beyond 1e-3, worst gap " + fmt("%.2e", worst)};
}

// 5. mu = 0.5 against the baseline with C1 = C
Outcome reduction() {
    Rng rng(505);
    double worst = 0.0;
    int unconverged = 0;
    for (int set = 0; set < 10; ++set) {
        const double amp = rng.uniform(0.5, 1.5), freq = rng.uniform(0.5, 2.0), phase = rng.uniform(0, 6.3),
                     slope = rng.uniform(-0.3, 0.3);
        RowMatrix x(30, 1);
        Eigen::VectorXd y(30);
        for (int i = 0; i < 30; ++i) {
            x(i, 0) = rng.uniform(-3, 3);
            y(i) = amp * std::sin(freq * x(i, 0) + phase) + slope * x(i, 0) + 0.05 * rng.normal();
        }
        const Dataset d = make_dataset(x, y);
        HyperParams hp;
        hp.epsilon = 0.01;
        hp.c = hp.c1 = hp.c2 = 10.0;
        hp.mu = 0.5;
        hp.solver.tolerance = 1e-8;
        hp.solver.max_epochs = 200000;
        hp.algorithm = Algorithm::svr;
        SolveReport rs, rm;
        const Model svr = fit_model(d, hp, &rs);
        hp.algorithm = Algorithm::mmd;
        const Model mmd = fit_model(d, hp, &rm);
        unconverged += !rs.converged + !rm.converged;
        const double lo = x.minCoeff(), hi = x.maxCoeff();
        for (int g = 0; g < 100; ++g) {
            const double probe = lo + (hi - lo) * g / 99.0;
            const std::span<const double> p(&probe, 1);
            worst = std::max(worst, std::abs(svr.predict(p) - mmd.predict(p)));
        }
    }
    return {worst <= 1e-2 && unconverged == 0, "10 datasets, eps 0.01, C = C1 = C2 = 10, " +
                                                    std::to_string(unconverged) + " unconverged, worst disagreement " +
                                                    fmt("%.4f", worst)};
}

// 6. exact fit of a line under 5-fold CV
Outcome exact_fit() {
    SyntheticSpec spec;
    spec.function = "linear";
    spec.n = 100;
    spec.noise = 0.0;
    const Dataset d = gen_synthetic(spec).train;
    std::string detail;
    bool pass = true;
    for (auto algo : {Algorithm::svr, Algorithm::mmd}) {
        HyperParams hp;
        hp.algorithm = algo;
        hp.kernel = KernelKind::linear;
        hp.bias_augment = true;
        hp.epsilon = 0.01;
        hp.c = hp.c1 = hp.c2 = 10.0;
        hp.mu = 0.5;
        const auto r = cross_validate(d, hp, 5, 1, 0);
        pass = pass && r.n_undefined == 0 && r.mean >= 0.999;
        detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(algo)) + " " + fmt("%.6f", r.mean);
    }
    return {pass, "mean R² " + detail};
}

std::map<std::string, std::vector<double>> read_scores(const std::filesystem::path& p) {
    std::map<std::string, std::vector<double>> out;
    std::istringstream in(ts::read_file(p));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string t; std::getline(ss, t, ',');) f.push_back(t);
        if (f.size() == 5 && !f[4].empty()) out[f[1]].push_back(std::stod(f[4]));
    }
    return out;
}

// 7. the full default benchmark on sinc data, through the command line
Outcome benchmark() {
    const auto dir = ts::temp_dir("acceptance_bench");
    std::ostringstream out, err;
    const int code = cli::run({"bench", "--function", "sinc", "--n", "200", "--noise", "0.1", "--seed", "0",
                               "--repeats", "10", "--out", (dir / "report.txt").string(), "--scores-out",
                               (dir / "scores.csv").string()},
                              out, err);
    if (code != 0) return {false, "bench exited with " + std::to_string(code) + ": " + err.str()};
    auto scores = read_scores(dir / "scores.csv");
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    if (scores["svr"].size() != 50 || scores["mmd"].size() != 50) return {false, "expected 50 scores per algorithm"};
    const double svr = mean(scores["svr"]), mmd = mean(scores["mmd"]);
    return {mmd >= svr - 0.01, "mean R² MMD-SVR " + fmt("%.4f", mmd) + " vs SVR " + fmt("%.4f", svr) +
                                   " over 5 folds x 10 repeats"};
}

// 8. hand-computed R² values
Outcome metric() {
    const std::vector<double> y{1, 2, 3, 4, 5}, outlier{1, 2, 3, 4, 10}, shifted{2, 3, 4, 5, 6};
    const auto a = r2(y, y), b = r2(outlier, y), c = r2(shifted, y);
    const bool pass = a && b && c && *a == 1.0 && *b == 1.0 && *c == 0.0;
    return {pass, "perfect " + (a ? fmt("%g", *a) : "undefined") + ", outlier " + (b ? fmt("%g", *b) : "undefined") +
                      ", shifted " + (c ? fmt("%g", *c) : "undefined")};
}

// 9. repeated bench runs and model files
Outcome determinism() {
    const auto dir = ts::temp_dir("acceptance_determinism");
    std::vector<std::string> args{"bench", "--function", "sinc", "--function", "poly", "--n", "60", "--seed", "3",
                                  "--repeats", "3", "--eps-grid", "0.05,0.1", "--c-grid", "1,16", "--c1-grid", "5,20",
                                  "--c2-grid", "5", "--mu-grid", "0.5,0.8", "--width-grid", "0.25,1", "--out"};
    std::string texts[2];
    for (int k = 0; k < 2; ++k) {
        auto a = args;
        const auto path = dir / ("report" + std::to_string(k) + ".txt");
        a.push_back(path.string());
        std::ostringstream out, err;
        if (cli::run(a, out, err) != 0) return {false, "bench failed: " + err.str()};
        texts[k] = ts::read_file(path);
    }
    const bool same_report = !texts[0].empty() && texts[0] == texts[1];

    SyntheticSpec spec;
    spec.function = "additive";
    spec.n = 80;
    const Dataset d = gen_synthetic(spec).train;
    bool same_predictions = true;
    std::size_t probes = 0;
    for (auto algo : {Algorithm::svr, Algorithm::mmd}) {
        HyperParams hp;
        hp.algorithm = algo;
        hp.mu = 0.8;
        hp.c = hp.c1 = hp.c2 = 5;
        hp.solver.max_epochs = 200;
        const Model m = fit_model(d, hp);
        const auto path = dir / ("model_" + std::string(to_string(algo)) + ".txt");
        save_model(m, path);
        const Model back = load_model(path);
        Rng rng(9);
        const RowMatrix grid = ts::random_points(rng, 500, 2) * 4.0;
        const Eigen::VectorXd p = m.predict(grid), q = back.predict(grid);
        for (Eigen::Index i = 0; i < p.size(); ++i, ++probes)
            same_predictions = same_predictions && std::memcmp(&p(i), &q(i), sizeof(double)) == 0;
    }
    return {same_report && same_predictions,
            std::string("reports ") + (same_report ? "identical" : "differ") + " (" + std::to_string(texts[0].size()) +
                " bytes), " + std::to_string(probes) + " round-trip predictions " +
                (same_predictions ? "bit-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
        {"gradient correctness", gradients},
        {"feasibility after every update", feasibility},
        {"monotone descent", descent},
        {"oracle equivalence", oracle},
        {"mu = 0.5 reduction", reduction},
        {"exact fit of a line", exact_fit},
        {"directional benchmark", benchmark},
        {"R² metric examples", metric},
        {"determinism", determinism},
    };
    std::set<int> wanted;
    for (int a = 1; a < argc; ++a) wanted.insert(std::atoi(argv[a]));

    int failed = 0;
    for (std::size_t k = 0; k < checks.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = checks[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d %s: %s (%s; %.1fs)\n", id, o.pass ? "PASS" : "FAIL", checks[k].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
