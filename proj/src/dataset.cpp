#include "mmdsvr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mmdsvr/rng.hpp"

namespace mmdsvr {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(std::string_view field) {
    if (field.empty()) return std::nullopt;
    if (field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void Dataset::validate() const {
    if (instances.rows() < 1) throw DataError("empty dataset");
    if (targets.size() != instances.rows())
        throw DataError("target count " + std::to_string(targets.size()) +
                        " does not match instance count " + std::to_string(instances.rows()));
    if (!instances.allFinite()) throw DataError("instances contain NaN or Inf");
    if (!targets.allFinite()) throw DataError("targets contain NaN or Inf");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.instances.resize(static_cast<Eigen::Index>(indices.size()), instances.cols());
    out.targets.resize(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = static_cast<Eigen::Index>(indices[r]);
        out.instances.row(static_cast<Eigen::Index>(r)) = instances.row(src);
        out.targets(static_cast<Eigen::Index>(r)) = targets(src);
    }
    return out;
}

Dataset make_dataset(RowMatrix instances, Eigen::VectorXd targets) {
    Dataset d{std::move(instances), std::move(targets)};
    d.validate();
    return d;
}

RowMatrix parse_table(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::string line;
    std::size_t row_index = 0;
    bool first = true;
    for (; std::getline(in, line); ++row_index) {
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (first) {
            first = false;
            width = fields.size();
            const bool header = std::none_of(fields.begin(), fields.end(),
                                             [](auto f) { return parse_number(f).has_value(); });
            if (header) continue;
        }
        if (fields.size() != width)
            throw DataError("row " + std::to_string(row_index) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(width));
        std::vector<double> values;
        values.reserve(width);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto v = parse_number(fields[c]);
            if (!v)
                throw DataError("non-numeric field '" + std::string(fields[c]) + "' at row " +
                                std::to_string(row_index) + ", column " + std::to_string(c));
            values.push_back(*v);
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError("empty dataset");
    RowMatrix t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    if (!t.allFinite()) throw DataError("data contains NaN or infinite values");
    return t;
}

RowMatrix load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    return parse_table(in);
}

Dataset split_target(const RowMatrix& table, std::optional<std::size_t> target_column) {
    const auto width = static_cast<std::size_t>(table.cols());
    if (width < 2) throw DataError("need at least one attribute column and one target column");
    const std::size_t target = target_column.value_or(width - 1);
    if (target >= width)
        throw DataError("target column " + std::to_string(target) + " out of range (" +
                        std::to_string(width) + " columns)");

    Dataset d;
    d.instances.resize(table.rows(), static_cast<Eigen::Index>(width - 1));
    d.targets = table.col(static_cast<Eigen::Index>(target));
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c)
        if (c != target) d.instances.col(col++) = table.col(static_cast<Eigen::Index>(c));
    d.validate();
    return d;
}

Dataset parse_csv(std::istream& in, std::optional<std::size_t> target_column) {
    return split_target(parse_table(in), target_column);
}

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> target_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    return parse_csv(in, target_column);
}

void write_csv(std::ostream& out, const Dataset& d) {
    for (std::size_t j = 0; j < d.dims(); ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (double v : d.row(i)) out << format_double(v) << ',';
        out << format_double(d.targets(static_cast<Eigen::Index>(i))) << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_csv(out, d);
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

NormalizationParams NormalizationParams::identity(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return {Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0)};
}

double NormalizationParams::apply(std::size_t j, double value) const {
    const auto k = static_cast<Eigen::Index>(j);
    const double range = max(k) - min(k);
    if (range == 0.0) return 0.0;
    return 2.0 * (value - min(k)) / range - 1.0;
}

double NormalizationParams::invert(std::size_t j, double value) const {
    const auto k = static_cast<Eigen::Index>(j);
    return min(k) + (value + 1.0) * 0.5 * (max(k) - min(k));
}

void NormalizationParams::apply_row(std::span<const double> raw, std::span<double> out) const {
    if (raw.size() != dims() || out.size() != dims())
        throw DataError("instance has " + std::to_string(raw.size()) + " attributes, expected " +
                        std::to_string(dims()));
    for (std::size_t j = 0; j < raw.size(); ++j) out[j] = apply(j, raw[j]);
}

NormalizationParams fit_normalizer(const Dataset& d) {
    d.validate();
    return {d.instances.colwise().minCoeff().transpose(), d.instances.colwise().maxCoeff().transpose()};
}

RowMatrix apply_normalizer(const NormalizationParams& p, const RowMatrix& instances) {
    if (static_cast<std::size_t>(instances.cols()) != p.dims())
        throw DataError("dataset has " + std::to_string(instances.cols()) +
                        " attributes, normalizer expects " + std::to_string(p.dims()));
    RowMatrix out(instances.rows(), instances.cols());
    for (Eigen::Index i = 0; i < instances.rows(); ++i)
        for (Eigen::Index j = 0; j < instances.cols(); ++j)
            out(i, j) = p.apply(static_cast<std::size_t>(j), instances(i, j));
    return out;
}

Dataset apply_normalizer(const NormalizationParams& p, const Dataset& d) {
    return {apply_normalizer(p, d.instances), d.targets};
}

std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n)
        throw DataError("fold count " + std::to_string(k) + " must lie in [2, " +
                        std::to_string(n) + "]");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span(perm));

    std::vector<Fold> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t begin = f * n / k;
        const std::size_t end = (f + 1) * n / k;
        auto& fold = folds[f];
        fold.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
        fold.train.reserve(n - fold.test.size());
        fold.train.insert(fold.train.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(begin));
        fold.train.insert(fold.train.end(), perm.begin() + static_cast<std::ptrdiff_t>(end), perm.end());
        std::sort(fold.test.begin(), fold.test.end());
        std::sort(fold.train.begin(), fold.train.end());
    }
    return folds;
}

std::vector<Fold> kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed) {
    d.validate();
    return kfold_split(d.size(), k, seed);
}

void write_folds_csv(std::ostream& out, std::span<const Fold> folds) {
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    for (std::size_t f = 0; f < folds.size(); ++f)
        for (auto i : folds[f].test) rows.emplace_back(i, f);
    std::sort(rows.begin(), rows.end());
    out << "index,fold\n";
    for (auto [i, f] : rows) out << i << ',' << f << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic generators

namespace {

struct Generator {
    std::string_view name;
    std::vector<DomainBounds> domain;
    double (*fn)(std::span<const double>);
};

double sinc(std::span<const double> x) {
    const double t = std::numbers::pi * x[0];
    return t == 0.0 ? 1.0 : std::sin(t) / t;
}

double poly(std::span<const double> x) {
    const double v = x[0];
    return 0.5 * v * v * v - v * v + v;
}

double additive(std::span<const double> x) { return std::sin(x[0]) + 0.5 * x[1] * x[1]; }

double linear(std::span<const double> x) { return 2.0 * x[0] - 1.0; }

const std::vector<Generator>& generators() {
    static const std::vector<Generator> table = {
        {"sinc", {{-4.0, 4.0}}, &sinc},
        {"poly", {{-2.0, 2.0}}, &poly},
        {"additive", {{-3.0, 3.0}, {-3.0, 3.0}}, &additive},
        {"linear", {{-3.0, 3.0}}, &linear},
    };
    return table;
}

const Generator& find_generator(std::string_view name) {
    for (const auto& g : generators())
        if (g.name == name) return g;
    throw DataError("unknown function '" + std::string(name) + "'");
}

}  // namespace

std::vector<std::string> synthetic_functions() {
    std::vector<std::string> names;
    for (const auto& g : generators()) names.emplace_back(g.name);
    return names;
}

std::size_t synthetic_input_dims(std::string_view function) {
    return find_generator(function).domain.size();
}

std::vector<DomainBounds> synthetic_default_domain(std::string_view function) {
    return find_generator(function).domain;
}

double synthetic_target(std::string_view function, std::span<const double> x) {
    const auto& g = find_generator(function);
    if (x.size() != g.domain.size())
        throw DataError("function '" + std::string(function) + "' takes " +
                        std::to_string(g.domain.size()) + " inputs");
    return g.fn(x);
}

void SyntheticSpec::validate() const {
    const auto& g = find_generator(function);
    if (n < 1) throw DataError("sample count must be >= 1");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw DataError("noise must be a finite value >= 0");
    if (!bounds.empty()) {
        if (bounds.size() != g.domain.size())
            throw DataError("function '" + function + "' needs " + std::to_string(g.domain.size()) +
                            " domain bounds");
        for (const auto& b : bounds)
            if (!(b.lower < b.upper)) throw DataError("domain lower bound must be below upper bound");
    }
}

SyntheticSample gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto& g = find_generator(spec.function);
    const auto& domain = spec.bounds.empty() ? g.domain : spec.bounds;
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto d = static_cast<Eigen::Index>(domain.size());

    SyntheticSample out;
    out.train.instances.resize(n, d);
    out.train.targets.resize(n);
    out.clean_targets.resize(n);

    Rng inputs(derive_seed(spec.seed, 0));
    Rng noise(derive_seed(spec.seed, 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto& b = domain[static_cast<std::size_t>(j)];
            out.train.instances(i, j) = inputs.uniform(b.lower, b.upper);
        }
        const double clean = g.fn(out.train.row(static_cast<std::size_t>(i)));
        out.clean_targets(i) = clean;
        out.train.targets(i) = spec.noise == 0.0 ? clean : clean + spec.noise * noise.normal();
    }
    return out;
}

}  // namespace mmdsvr
