#include "mmdsvr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mmdsvr/dataset.hpp"
#include "mmdsvr/model.hpp"

namespace mmdsvr::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string format(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string full(double v) { return format("%.17g", v); }

std::vector<std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::vector<std::string> args;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        while (!key.empty() && key.front() == '-') key.erase(key.begin());
        if (key.empty() || value.empty())
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        if (key == "config") throw UsageError(path + ": config files cannot include other config files");
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

// Flags shared by every training command.
struct TrainingFlags {
    std::string kernel = "rbf";
    bool bias_augment = true;
    double tolerance;
    int max_epochs;
    std::uint64_t solver_seed = 1;
    double backtrack_ratio = 0.5;
    int max_backtrack = 30;

    TrainingFlags(double tol, int epochs) : tolerance(tol), max_epochs(epochs) {}

    void add(CLI::App* app) {
        app->add_option("--kernel", kernel, "linear or rbf")->capture_default_str();
        app->add_option("--bias-augment", bias_augment, "add 1 to the kernel (true/false)")->capture_default_str();
        app->add_option("--tol", tolerance, "projected-gradient stopping tolerance")->capture_default_str();
        app->add_option("--max-epochs", max_epochs, "epoch cap per fit")->capture_default_str();
        app->add_option("--solver-seed", solver_seed, "seed of the coordinate permutations")->capture_default_str();
        app->add_option("--backtrack-ratio", backtrack_ratio, "step ladder ratio v (mmd)")->capture_default_str();
        app->add_option("--max-backtrack", max_backtrack, "last ladder rung (mmd)")->capture_default_str();
    }

    HyperParams base(Algorithm algo) const {
        HyperParams hp;
        hp.algorithm = algo;
        hp.kernel = parse_kernel_kind(kernel);
        hp.bias_augment = bias_augment;
        hp.solver.tolerance = tolerance;
        hp.solver.max_epochs = max_epochs;
        hp.solver.seed = solver_seed;
        hp.backtrack_ratio = backtrack_ratio;
        hp.max_backtrack = max_backtrack;
        return hp;
    }
};

struct GridFlags {
    std::string eps, c, c1, c2, mu, width;

    void add(CLI::App* app) {
        app->add_option("--eps-grid", eps, "comma list (default 0.01,0.05,0.1,0.2)");
        app->add_option("--c-grid", c, "comma list for svr (default 2^0..2^9)");
        app->add_option("--c1-grid", c1, "comma list for mmd (default 5,10,...,30)");
        app->add_option("--c2-grid", c2, "comma list for mmd (default 5,10,...,30)");
        app->add_option("--mu-grid", mu, "comma list for mmd (default 0.5,0.6,...,1)");
        app->add_option("--width-grid", width, "width multipliers of the mean pairwise distance (default 2^-4..2^5)");
    }

    GridSpec build(Algorithm algo) const {
        GridSpec g = GridSpec::defaults(algo);
        auto set = [](std::vector<double>& target, const std::string& text) {
            if (!text.empty()) target = parse_list(text);
        };
        set(g.epsilon, eps);
        set(g.width, width);
        if (algo == Algorithm::svr) {
            set(g.c, c);
        } else {
            set(g.c1, c1);
            set(g.c2, c2);
            set(g.mu, mu);
        }
        g.validate(algo);
        return g;
    }
};

Dataset load_data(const std::string& path, int target_col) {
    if (target_col < -1) throw UsageError("--target-col must be >= 0");
    return load_csv(path, target_col < 0 ? std::nullopt : std::optional<std::size_t>(target_col));
}

template <class F>
auto usage_checked(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::string params_summary(const HyperParams& p) {
    std::ostringstream s;
    s << "eps=" << p.epsilon;
    if (p.algorithm == Algorithm::svr)
        s << " C=" << p.c;
    else
        s << " C1=" << p.c1 << " C2=" << p.c2 << " mu=" << p.mu;
    if (p.kernel == KernelKind::rbf) s << " width=" << p.width << (p.width_relative ? "x" : "");
    return s.str();
}

std::string algo_label(Algorithm a) { return a == Algorithm::svr ? "SVR" : "MMD-SVR"; }

// --- gen ---------------------------------------------------------------

struct GenOpts {
    std::string function;
    std::size_t n = 200;
    double noise = 0.1;
    std::uint64_t seed = 0;
    std::string out;
};

void cmd_gen(const GenOpts& o, std::ostream& out) {
    const auto names = synthetic_functions();
    if (std::find(names.begin(), names.end(), o.function) == names.end())
        throw UsageError("unknown function '" + o.function + "'");
    SyntheticSpec spec;
    spec.function = o.function;
    spec.n = o.n;
    spec.noise = o.noise;
    spec.seed = o.seed;
    usage_checked([&] {
        spec.validate();
        return 0;
    });
    const auto sample = gen_synthetic(spec);
    save_csv(o.out, sample.train);
    out << "wrote " << sample.train.size() << " rows to " << o.out << '\n';
}

// --- train -------------------------------------------------------------

struct TrainOpts {
    std::string algo;
    std::string data;
    int target_col = -1;
    double eps = 0.1;
    double c = 1.0;
    double c1 = 1.0;
    double c2 = 1.0;
    double mu = 0.5;
    std::string width = "auto";
    std::string model_out;
    std::string trace;
    TrainingFlags training{1e-6, 1000};
};

void cmd_train(const TrainOpts& o, std::ostream& out, std::ostream& err) {
    const HyperParams hp = usage_checked([&] {
        HyperParams p = o.training.base(parse_algorithm(o.algo));
        p.epsilon = o.eps;
        p.c = o.c;
        p.c1 = o.c1;
        p.c2 = o.c2;
        p.mu = o.mu;
        if (o.width == "auto") {
            p.width = 1.0;
            p.width_relative = true;
        } else {
            std::size_t used = 0;
            try {
                p.width = std::stod(o.width, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != o.width.size()) throw std::invalid_argument("--width must be 'auto' or a number");
            p.width_relative = false;
        }
        p.validate();
        return p;
    });
    if (!o.trace.empty() && hp.algorithm != Algorithm::mmd) throw UsageError("--trace is only available for mmd");

    const Dataset d = load_data(o.data, o.target_col);
    std::unique_ptr<std::ofstream> trace;
    if (!o.trace.empty()) {
        trace = std::make_unique<std::ofstream>(o.trace);
        if (!*trace) throw std::runtime_error("cannot write '" + o.trace + "'");
    }
    SolveReport report;
    const Model m = fit_model(d, hp, &report, trace.get());
    save_model(m, o.model_out);

    out << "algorithm " << to_string(m.algorithm) << '\n'
        << "converged " << (report.converged ? 1 : 0) << '\n'
        << "epochs " << report.epochs << '\n'
        << "objective " << full(report.objective) << '\n'
        << "max_violation " << full(report.max_violation) << '\n'
        << "width " << full(m.kernel.width) << '\n'
        << "support " << m.support_size() << '\n';
    if (!report.converged)
        err << "warning: solver stopped at max_epochs=" << hp.solver.max_epochs
            << " with violation " << full(report.max_violation) << "; model saved with converged=0\n";
}

// --- predict -----------------------------------------------------------

struct PredictOpts {
    std::string model;
    std::string data;
    int target_col = -1;
    std::string out;
};

void cmd_predict(const PredictOpts& o, std::ostream& out, std::ostream& err) {
    const Model m = load_model(o.model);
    if (o.target_col < -1) throw UsageError("--target-col must be >= 0");
    const RowMatrix table = load_table(o.data);

    // as many columns as the model has attributes means there is no target
    RowMatrix x;
    std::optional<Eigen::VectorXd> y;
    if (static_cast<std::size_t>(table.cols()) == m.dims()) {
        x = table;
    } else if (static_cast<std::size_t>(table.cols()) == m.dims() + 1) {
        Dataset d = split_target(table, o.target_col < 0 ? std::nullopt : std::optional<std::size_t>(o.target_col));
        x = std::move(d.instances);
        y = std::move(d.targets);
    } else {
        throw DataError("data has " + std::to_string(table.cols()) + " columns but the model expects " +
                        std::to_string(m.dims()) + " attributes");
    }

    const Eigen::VectorXd pred = m.predict(x);
    std::ofstream file;
    std::ostream* sink = &out;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw std::runtime_error("cannot write '" + o.out + "'");
        sink = &file;
    }
    *sink << "prediction\n";
    for (Eigen::Index i = 0; i < pred.size(); ++i) *sink << full(pred(i)) << '\n';
    if (!*sink) throw std::runtime_error("write failed");

    if (y) {
        const auto score = r2({pred.data(), static_cast<std::size_t>(pred.size())},
                              {y->data(), static_cast<std::size_t>(y->size())});
        err << "r2 " << (score ? format("%.4f", *score) : std::string("undefined")) << '\n';
    }
}

// --- cv ----------------------------------------------------------------

struct CvOpts {
    std::string algo;
    std::string data;
    int target_col = -1;
    std::size_t folds = 5;
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    std::string out;
    std::string scores_out;
    GridFlags grid;
    TrainingFlags training{1e-3, 200};
};

void cmd_cv(const CvOpts& o, std::ostream& out, std::ostream& err) {
    const auto [base, grid] = usage_checked([&] {
        HyperParams b = o.training.base(parse_algorithm(o.algo));
        GridSpec g = o.grid.build(b.algorithm);
        for (const auto& p : g.enumerate(b)) p.validate();
        if (o.folds < 2) throw std::invalid_argument("--folds must be >= 2");
        if (o.repeats < 1) throw std::invalid_argument("--repeats must be >= 1");
        return std::pair{b, g};
    });
    const Dataset d = load_data(o.data, o.target_col);
    if (o.folds > d.size()) throw UsageError("--folds exceeds the number of instances");

    const GridResult result = grid_search(d, grid, base, o.folds, o.repeats, o.seed);

    std::ofstream file;
    std::ostream* table = &out;
    std::ostream* summary = &err;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw std::runtime_error("cannot write '" + o.out + "'");
        table = &file;
        summary = &out;
    }
    write_grid_csv(*table, result);
    if (!*table) throw std::runtime_error("write failed");

    const CVResult& best = result.best_result();
    *summary << "grid points " << result.rows.size() << '\n'
             << "best " << params_summary(best.params) << '\n'
             << "mean " << format("%.4f", best.mean) << " std " << format("%.4f", best.std) << " (" << best.folds
             << " folds x " << best.repeats << " repeats)\n"
             << "repeat mean " << format("%.4f", best.repeat_mean) << " std " << format("%.4f", best.repeat_std)
             << '\n';
    if (best.n_undefined > 0) *summary << "undefined r2 folds " << best.n_undefined << '\n';
    std::size_t capped = 0;
    for (const auto& row : result.rows) capped += row.non_converged;
    if (capped > 0)
        *summary << "fits stopped at max_epochs " << capped << " of " << result.rows.size() * o.folds * o.repeats
                 << '\n';

    if (!o.scores_out.empty()) {
        std::ofstream s(o.scores_out);
        if (!s) throw std::runtime_error("cannot write '" + o.scores_out + "'");
        write_scores_csv(s, best);
    }
}

// --- bench -------------------------------------------------------------

struct BenchOpts {
    std::vector<std::string> data;
    std::vector<std::string> functions;
    int target_col = -1;
    std::size_t n = 200;
    double noise = 0.1;
    std::uint64_t seed = 0;
    std::size_t folds = 5;
    std::size_t repeats = 10;
    std::size_t select_repeats = 1;
    double level = 0.95;
    std::string out;
    std::string scores_out;
    GridFlags grid;
    TrainingFlags training{1e-3, 200};
};

void cmd_bench(const BenchOpts& o, std::ostream& out) {
    struct Plan {
        HyperParams base;
        GridSpec grid;
    };
    const auto plans = usage_checked([&] {
        std::vector<Plan> p;
        for (auto algo : {Algorithm::svr, Algorithm::mmd}) {
            HyperParams b = o.training.base(algo);
            GridSpec g = o.grid.build(algo);
            for (const auto& hp : g.enumerate(b)) hp.validate();
            p.push_back({b, g});
        }
        if (o.data.empty() && o.functions.empty()) throw std::invalid_argument("bench needs --data or --function");
        if (o.folds < 2) throw std::invalid_argument("--folds must be >= 2");
        if (o.repeats < 1 || o.select_repeats < 1) throw std::invalid_argument("repeats must be >= 1");
        if (o.level != 0.90 && o.level != 0.95 && o.level != 0.99)
            throw std::invalid_argument("--level must be 0.90, 0.95 or 0.99");
        const auto names = synthetic_functions();
        for (const auto& f : o.functions)
            if (std::find(names.begin(), names.end(), f) == names.end())
                throw std::invalid_argument("unknown function '" + f + "'");
        return p;
    });

    std::vector<std::pair<std::string, Dataset>> sets;
    for (const auto& path : o.data) sets.emplace_back(std::filesystem::path(path).stem().string(), load_data(path, o.target_col));
    for (const auto& f : o.functions) {
        SyntheticSpec spec;
        spec.function = f;
        spec.n = o.n;
        spec.noise = o.noise;
        spec.seed = o.seed;
        usage_checked([&] {
            spec.validate();
            return 0;
        });
        sets.emplace_back(f, gen_synthetic(spec).train);
    }

    BenchReport report;
    report.level = o.level;
    for (const auto& [name, d] : sets) {
        if (o.folds > d.size()) throw UsageError("--folds exceeds the size of dataset '" + name + "'");
        BenchEntry e;
        e.dataset = name;
        e.size = d.size();
        // Selection and final scoring draw their folds from the same seed, so
        // every algorithm sees identical splits.
        for (const auto& plan : plans) {
            const auto selected = grid_search(d, plan.grid, plan.base, o.folds, o.select_repeats, o.seed);
            auto final = cross_validate(d, selected.best_result().params, o.folds, o.repeats, o.seed);
            (plan.base.algorithm == Algorithm::svr ? e.svr : e.mmd) = std::move(final);
        }
        compare(e, o.level);
        report.entries.push_back(std::move(e));
    }
    tally(report);

    const std::string text = format_report(report);
    if (o.out.empty()) {
        out << text;
    } else {
        std::ofstream file(o.out, std::ios::binary);
        if (!file) throw std::runtime_error("cannot write '" + o.out + "'");
        file << text;
        if (!file) throw std::runtime_error("write failed");
        out << "wrote report to " << o.out << '\n';
    }

    if (!o.scores_out.empty()) {
        std::ofstream s(o.scores_out);
        if (!s) throw std::runtime_error("cannot write '" + o.scores_out + "'");
        s << "dataset,algorithm,repeat,fold,r2\n";
        for (const auto& e : report.entries)
            for (const CVResult* r : {&e.svr, &e.mmd})
                for (std::size_t rep = 0; rep < r->repeats; ++rep)
                    for (std::size_t f = 0; f < r->folds; ++f) {
                        const auto& v = r->scores[rep * r->folds + f];
                        s << e.dataset << ',' << to_string(r->params.algorithm) << ',' << rep << ',' << f << ','
                          << (v ? full(*v) : std::string()) << '\n';
                    }
    }
}

std::size_t display_width(const std::string& s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char ch) { return (static_cast<unsigned char>(ch) & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) { return s + std::string(width - display_width(s), ' '); }

std::string score_cell(const CVResult& r) {
    if (std::isnan(r.mean)) return "undefined";
    return format("%.4f", r.mean) + "±" + format("%.4f", r.std);
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (t.empty() || used != t.size() || !std::isfinite(v))
            throw std::invalid_argument("bad number '" + t + "' in list '" + text + "'");
        values.push_back(v);
    }
    if (values.empty()) throw std::invalid_argument("empty list");
    return values;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> rest;
    std::vector<std::string> from_files;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            const auto lines = read_config(args[++i]);
            from_files.insert(from_files.end(), lines.begin(), lines.end());
        } else if (a.rfind("--config=", 0) == 0) {
            const auto lines = read_config(a.substr(9));
            from_files.insert(from_files.end(), lines.begin(), lines.end());
        } else {
            rest.push_back(a);
        }
    }
    if (from_files.empty()) return rest;
    const auto sub = std::find_if(rest.begin(), rest.end(), [](const std::string& s) { return s.empty() || s[0] != '-'; });
    if (sub == rest.end()) throw UsageError("--config needs a command");
    rest.insert(sub + 1, from_files.begin(), from_files.end());
    return rest;
}

void compare(BenchEntry& entry, double level) {
    std::vector<double> a;
    std::vector<double> b;
    const std::size_t count = std::min(entry.mmd.scores.size(), entry.svr.scores.size());
    for (std::size_t i = 0; i < count; ++i)
        if (entry.mmd.scores[i] && entry.svr.scores[i]) {
            a.push_back(*entry.mmd.scores[i]);
            b.push_back(*entry.svr.scores[i]);
        }
    entry.test.reset();
    if (a.size() >= 2) entry.test = paired_t_test(a, b, level);
}

void tally(BenchReport& report) {
    report.wins = report.ties = report.losses = 0;
    for (const auto& e : report.entries) {
        if (e.test && e.test->significant && e.test->direction == Direction::a)
            ++report.wins;
        else if (e.test && e.test->significant && e.test->direction == Direction::b)
            ++report.losses;
        else
            ++report.ties;
    }
}

std::string format_report(const BenchReport& report) {
    std::vector<std::vector<std::string>> rows{{"dataset", "n", "SVR", "MMD-SVR"}};
    for (const auto& e : report.entries) {
        std::string svr = score_cell(e.svr);
        // the mark sits on the compared method, as in the reference tables
        if (e.test && e.test->significant) svr += e.test->direction == Direction::a ? "•" : "◦";
        rows.push_back({e.dataset, std::to_string(e.size), svr, score_cell(e.mmd)});
    }
    std::vector<std::size_t> widths(4, 0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) widths[j] = std::max(widths[j], display_width(r[j]));

    std::ostringstream s;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t j = 0; j < r.size(); ++j) line += j + 1 < r.size() ? pad(r[j], widths[j] + 2) : r[j];
        s << line << '\n';
    }
    s << "win/tie/loss (MMD-SVR vs SVR): " << report.wins << '/' << report.ties << '/' << report.losses << "\n\n";

    s << "mean±std of R² over folds x repeats; •/◦: MMD-SVR significantly better/worse (paired t-test, "
      << format("%.0f", report.level * 100) << "%, shared folds)\n";
    for (const auto& e : report.entries) {
        s << '\n' << e.dataset << '\n';
        for (const CVResult* r : {&e.svr, &e.mmd}) {
            s << "  " << pad(algo_label(r->params.algorithm), 8) << params_summary(r->params) << '\n';
            s << "  " << pad("", 8) << "repeat means " << format("%.4f", r->repeat_mean) << "±"
              << format("%.4f", r->repeat_std) << " over " << r->repeat_means.size() << " repeats\n";
            if (r->n_undefined > 0)
                s << "  " << pad("", 8) << "undefined R² on " << r->n_undefined << " of " << r->scores.size()
                  << " folds\n";
            if (r->non_converged > 0)
                s << "  " << pad("", 8) << r->non_converged << " of " << r->scores.size()
                  << " fits stopped at max_epochs\n";
        }
        if (e.test)
            s << "  t=" << format("%.4f", e.test->t) << " df=" << e.test->df << " critical="
              << format("%.4f", e.test->critical) << '\n';
        else
            s << "  no t-test (fewer than two paired folds)\n";
    }
    return s.str();
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    try {
        args = expand_config(raw_args);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    CLI::App app{"Kernel regression with epsilon-SVR and MMD-SVR", "mmdsvr"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    GenOpts gen;
    auto* g = app.add_subcommand("gen", "generate a synthetic dataset");
    g->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    g->add_option("--function", gen.function, "sinc, poly, additive or linear")->required();
    g->add_option("--n", gen.n, "number of samples")->capture_default_str();
    g->add_option("--noise", gen.noise, "noise standard deviation")->capture_default_str();
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--out", gen.out, "output CSV")->required();

    TrainOpts train;
    auto* t = app.add_subcommand("train", "train one model");
    t->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    t->add_option("--algo", train.algo, "svr or mmd")->required();
    t->add_option("--data", train.data, "training CSV")->required();
    t->add_option("--target-col", train.target_col, "0-based target column (default: last)");
    t->add_option("--eps", train.eps)->capture_default_str();
    t->add_option("--c", train.c, "svr penalty")->capture_default_str();
    t->add_option("--c1", train.c1, "mmd tube penalty")->capture_default_str();
    t->add_option("--c2", train.c2, "mmd belt penalty")->capture_default_str();
    t->add_option("--mu", train.mu, "mmd belt position in [0.5,1]")->capture_default_str();
    t->add_option("--width", train.width, "rbf width, or auto for the mean pairwise distance")->capture_default_str();
    t->add_option("--model-out", train.model_out)->required();
    t->add_option("--trace", train.trace, "per-epoch CSV trace (mmd)");
    train.training.add(t);

    PredictOpts predict;
    auto* p = app.add_subcommand("predict", "predict with a saved model");
    p->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    p->add_option("--model", predict.model)->required();
    p->add_option("--data", predict.data, "CSV with or without the target column")->required();
    p->add_option("--target-col", predict.target_col, "0-based target column (default: last)");
    p->add_option("--out", predict.out, "output CSV (default: stdout)");

    CvOpts cv;
    auto* c = app.add_subcommand("cv", "grid search by repeated k-fold cross-validation");
    c->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    c->add_option("--algo", cv.algo, "svr or mmd")->required();
    c->add_option("--data", cv.data)->required();
    c->add_option("--target-col", cv.target_col, "0-based target column (default: last)");
    c->add_option("--folds", cv.folds)->capture_default_str();
    c->add_option("--repeats", cv.repeats)->capture_default_str();
    c->add_option("--seed", cv.seed)->capture_default_str();
    c->add_option("--out", cv.out, "grid table CSV (default: stdout)");
    c->add_option("--scores-out", cv.scores_out, "fold scores of the best point");
    cv.grid.add(c);
    cv.training.add(c);

    BenchOpts bench;
    auto* b = app.add_subcommand("bench", "compare SVR and MMD-SVR on shared folds");
    b->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    b->add_option("--data", bench.data, "dataset CSV (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    b->add_option("--function", bench.functions, "synthetic dataset (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    b->add_option("--target-col", bench.target_col, "0-based target column (default: last)");
    b->add_option("--n", bench.n, "synthetic sample size")->capture_default_str();
    b->add_option("--noise", bench.noise, "synthetic noise standard deviation")->capture_default_str();
    b->add_option("--seed", bench.seed, "seed of the synthetic data and the folds")->capture_default_str();
    b->add_option("--folds", bench.folds)->capture_default_str();
    b->add_option("--repeats", bench.repeats, "repeats of the final evaluation")->capture_default_str();
    b->add_option("--select-repeats", bench.select_repeats, "repeats used by the grid search")->capture_default_str();
    b->add_option("--level", bench.level, "t-test level: 0.90, 0.95 or 0.99")->capture_default_str();
    b->add_option("--out", bench.out, "report file (default: stdout)");
    b->add_option("--scores-out", bench.scores_out, "CSV of every final fold score");
    bench.grid.add(b);
    bench.training.add(b);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (g->parsed()) cmd_gen(gen, out);
        if (t->parsed()) cmd_train(train, out, err);
        if (p->parsed()) cmd_predict(predict, out, err);
        if (c->parsed()) cmd_cv(cv, out, err);
        if (b->parsed()) cmd_bench(bench, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kSuccess;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace mmdsvr::cli
