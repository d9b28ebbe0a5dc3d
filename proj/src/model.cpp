#include "mmdsvr/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mmdsvr {

namespace {

constexpr std::string_view kMagic = "MMDSVR-MODEL";
constexpr std::string_view kVersion = "v1";

using Kind = ModelFormatError::Kind;

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(std::string_view token, std::string_view what) {
    double v = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw ModelFormatError(Kind::malformed, "malformed model: bad " + std::string(what) + " '" +
                                                    std::string(token) + "'");
    return v;
}

std::size_t parse_count(std::string_view token, std::string_view what) {
    std::size_t v = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw ModelFormatError(Kind::malformed, "malformed model: bad " + std::string(what) + " '" +
                                                    std::string(token) + "'");
    return v;
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    /// Next line split on whitespace (commas count as whitespace).
    std::vector<std::string> next(std::string_view section) {
        std::string line;
        if (!std::getline(in_, line))
            throw ModelFormatError(Kind::truncated, "truncated model: missing " + std::string(section));
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        for (std::string t; ss >> t;) tokens.push_back(std::move(t));
        return tokens;
    }

    /// Line that must start with `key` followed by exactly `count` values.
    std::vector<std::string> keyed(std::string_view key, std::size_t count) {
        auto tokens = next(key);
        if (tokens.empty() || tokens[0] != key || tokens.size() != count + 1)
            throw ModelFormatError(Kind::malformed, "malformed model: expected '" + std::string(key) +
                                                        "' line with " + std::to_string(count) +
                                                        " values");
        tokens.erase(tokens.begin());
        return tokens;
    }

private:
    std::istream& in_;
};

}  // namespace

std::string_view to_string(Algorithm algo) { return algo == Algorithm::svr ? "svr" : "mmd"; }

Algorithm parse_algorithm(std::string_view name) {
    if (name == "svr") return Algorithm::svr;
    if (name == "mmd") return Algorithm::mmd;
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

void Model::validate() const {
    kernel.validate();
    if (normalization.min.size() != normalization.max.size())
        throw std::invalid_argument("normalization min/max length mismatch");
    if (static_cast<std::size_t>(support.cols()) != dims() && support.rows() > 0)
        throw std::invalid_argument("support instances do not match the attribute count");
    if (coefficients.size() != support.rows())
        throw std::invalid_argument("coefficient count does not match support instance count");
    if (!support.allFinite() || !coefficients.allFinite() || !std::isfinite(bias))
        throw std::invalid_argument("model contains non-finite values");
}

double Model::predict_normalized(std::span<const double> x) const {
    double f = bias;
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
        const std::span<const double> s{support.row(i).data(), static_cast<std::size_t>(support.cols())};
        f += coefficients(i) * eval_kernel(kernel, s, x);
    }
    return f;
}

double Model::predict(std::span<const double> raw) const {
    std::vector<double> x(dims());
    normalization.apply_row(raw, x);
    return predict_normalized(x);
}

Eigen::VectorXd Model::predict(const RowMatrix& raw) const {
    Eigen::VectorXd out(raw.rows());
    for (Eigen::Index i = 0; i < raw.rows(); ++i)
        out(i) = predict(std::span<const double>{raw.row(i).data(), static_cast<std::size_t>(raw.cols())});
    return out;
}

Model make_model(Algorithm algo, const KernelSpec& kernel, NormalizationParams normalization,
                 const RowMatrix& normalized_instances, const Eigen::VectorXd& coefficients,
                 bool converged) {
    if (coefficients.size() != normalized_instances.rows())
        throw std::invalid_argument("coefficient count does not match instance count");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < coefficients.size(); ++i)
        if (coefficients(i) != 0.0) keep.push_back(i);

    Model m;
    m.algorithm = algo;
    m.kernel = kernel;
    m.normalization = std::move(normalization);
    m.support.resize(static_cast<Eigen::Index>(keep.size()), normalized_instances.cols());
    m.coefficients.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        m.support.row(static_cast<Eigen::Index>(r)) = normalized_instances.row(keep[r]);
        m.coefficients(static_cast<Eigen::Index>(r)) = coefficients(keep[r]);
    }
    m.converged = converged;
    m.validate();
    return m;
}

void write_model(std::ostream& out, const Model& m) {
    m.validate();
    out << kMagic << ' ' << kVersion << '\n';
    out << "algorithm " << to_string(m.algorithm) << " converged " << (m.converged ? 1 : 0)
        << " bias " << fmt17(m.bias) << '\n';
    out << "kernel " << to_string(m.kernel.kind) << ' ' << fmt17(m.kernel.width) << ' '
        << (m.kernel.bias_augment ? 1 : 0) << '\n';
    out << "d " << m.dims() << '\n';
    out << "min";
    for (double v : m.normalization.min) out << ' ' << fmt17(v);
    out << "\nmax";
    for (double v : m.normalization.max) out << ' ' << fmt17(v);
    out << "\nm " << m.support_size() << '\n';
    for (Eigen::Index i = 0; i < m.support.rows(); ++i) {
        out << fmt17(m.coefficients(i));
        for (Eigen::Index j = 0; j < m.support.cols(); ++j) out << ", " << fmt17(m.support(i, j));
        out << '\n';
    }
}

Model read_model(std::istream& in) {
    LineReader reader(in);
    {
        std::string line;
        if (!std::getline(in, line)) throw ModelFormatError(Kind::not_a_model, "not a model file (empty)");
        std::istringstream ss(line);
        std::string magic, version, extra;
        ss >> magic >> version;
        if (magic != kMagic) throw ModelFormatError(Kind::not_a_model, "not a model file");
        if (version != kVersion || (ss >> extra))
            throw ModelFormatError(Kind::unsupported_version,
                                   "unsupported model version '" + version + "'");
    }

    Model m;
    {
        auto t = reader.keyed("algorithm", 5);
        if (t[1] != "converged" || t[3] != "bias")
            throw ModelFormatError(Kind::malformed, "malformed model: bad algorithm line");
        try {
            m.algorithm = parse_algorithm(t[0]);
        } catch (const std::invalid_argument& e) {
            throw ModelFormatError(Kind::malformed, std::string("malformed model: ") + e.what());
        }
        const auto conv = parse_count(t[2], "converged flag");
        if (conv > 1) throw ModelFormatError(Kind::malformed, "malformed model: bad converged flag");
        m.converged = conv == 1;
        m.bias = parse_real(t[4], "bias");
    }
    {
        auto t = reader.keyed("kernel", 3);
        try {
            m.kernel.kind = parse_kernel_kind(t[0]);
        } catch (const std::invalid_argument& e) {
            throw ModelFormatError(Kind::malformed, std::string("malformed model: ") + e.what());
        }
        m.kernel.width = parse_real(t[1], "kernel width");
        const auto aug = parse_count(t[2], "bias_augment flag");
        if (aug > 1) throw ModelFormatError(Kind::malformed, "malformed model: bad bias_augment flag");
        m.kernel.bias_augment = aug == 1;
    }
    const auto d = parse_count(reader.keyed("d", 1)[0], "attribute count");
    const auto di = static_cast<Eigen::Index>(d);
    m.normalization.min.resize(di);
    m.normalization.max.resize(di);
    {
        auto lo = reader.keyed("min", d);
        for (std::size_t j = 0; j < d; ++j) m.normalization.min(static_cast<Eigen::Index>(j)) = parse_real(lo[j], "min");
        auto hi = reader.keyed("max", d);
        for (std::size_t j = 0; j < d; ++j) m.normalization.max(static_cast<Eigen::Index>(j)) = parse_real(hi[j], "max");
    }
    const auto count = parse_count(reader.keyed("m", 1)[0], "support count");
    m.support.resize(static_cast<Eigen::Index>(count), di);
    m.coefficients.resize(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::string> t;
        try {
            t = reader.next("coefficients");
        } catch (const ModelFormatError&) {
            throw ModelFormatError(Kind::truncated, "truncated model: expected " + std::to_string(count) +
                                                        " support lines, found " + std::to_string(i));
        }
        if (t.size() != d + 1) {
            // a short final line is what a cut-off write leaves behind
            const bool last_line = in.peek() == std::char_traits<char>::eof();
            if (last_line && t.size() < d + 1)
                throw ModelFormatError(Kind::truncated, "truncated model: support line " +
                                                            std::to_string(i) + " is incomplete");
            throw ModelFormatError(Kind::malformed, "malformed model: support line " + std::to_string(i) +
                                                        " has " + std::to_string(t.size()) + " fields");
        }
        const auto r = static_cast<Eigen::Index>(i);
        m.coefficients(r) = parse_real(t[0], "coefficient");
        for (std::size_t j = 0; j < d; ++j) m.support(r, static_cast<Eigen::Index>(j)) = parse_real(t[j + 1], "support value");
    }
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ModelFormatError(Kind::malformed, std::string("malformed model: ") + e.what());
    }
    return m;
}

void save_model(const Model& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_model(out, m);
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    return read_model(in);
}

}  // namespace mmdsvr
