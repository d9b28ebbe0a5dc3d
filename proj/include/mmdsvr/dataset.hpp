#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mmdsvr {

/// Row-major so that each instance is a contiguous span.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// n instances with d attributes each, plus one target per instance.
struct Dataset {
    RowMatrix instances;
    Eigen::VectorXd targets;

    std::size_t size() const { return static_cast<std::size_t>(instances.rows()); }
    std::size_t dims() const { return static_cast<std::size_t>(instances.cols()); }

    std::span<const double> row(std::size_t i) const {
        return {instances.row(static_cast<Eigen::Index>(i)).data(), dims()};
    }

    /// Throws DataError unless n >= 1, shapes agree and every value is finite.
    void validate() const;

    Dataset subset(std::span<const std::size_t> indices) const;
};

Dataset make_dataset(RowMatrix instances, Eigen::VectorXd targets);

/// Reads a comma-separated file. The first row is treated as a header when none
/// of its fields is numeric. `target_column` defaults to the last column.
Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::size_t> target_column = std::nullopt);
Dataset parse_csv(std::istream& in, std::optional<std::size_t> target_column = std::nullopt);

/// The numeric cells of a CSV file, same header rule, no target split.
RowMatrix parse_table(std::istream& in);
RowMatrix load_table(const std::filesystem::path& path);
Dataset split_target(const RowMatrix& table, std::optional<std::size_t> target_column = std::nullopt);

/// Writes instances followed by the target as the last column, with a header
/// row `x1,...,xd,y` and round-trip precision.
void write_csv(std::ostream& out, const Dataset& d);
void save_csv(const std::filesystem::path& path, const Dataset& d);

/// Per-attribute affine map of [min, max] onto [-1, 1].
struct NormalizationParams {
    Eigen::VectorXd min;
    Eigen::VectorXd max;

    std::size_t dims() const { return static_cast<std::size_t>(min.size()); }

    /// Parameters for which apply() is the identity map.
    static NormalizationParams identity(std::size_t d);

    double apply(std::size_t j, double value) const;
    double invert(std::size_t j, double value) const;
    void apply_row(std::span<const double> raw, std::span<double> out) const;
};

NormalizationParams fit_normalizer(const Dataset& d);

/// Constant attributes map to 0. Values outside the fitted range extrapolate
/// linearly (no clipping). Targets are copied unchanged.
Dataset apply_normalizer(const NormalizationParams& p, const Dataset& d);
RowMatrix apply_normalizer(const NormalizationParams& p, const RowMatrix& instances);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Shuffles 0..n-1 with a generator seeded by `seed` and cuts the permutation
/// into k contiguous folds whose sizes differ by at most one. Fold f is the
/// test set of split f. Index lists are sorted ascending.
std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);
std::vector<Fold> kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed);

/// CSV with header `index,fold`, one row per instance.
void write_folds_csv(std::ostream& out, std::span<const Fold> folds);

struct DomainBounds {
    double lower;
    double upper;
};

struct SyntheticSpec {
    std::string function = "sinc";
    std::size_t n = 200;
    double noise = 0.1;                ///< Standard deviation of the additive Gaussian noise.
    std::vector<DomainBounds> bounds;  ///< Empty means the function's default domain.
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSample {
    Dataset train;                 ///< Noisy targets.
    Eigen::VectorXd clean_targets;
};

/// Built-in generators:
///   sinc      sin(pi x) / (pi x), sinc(0) = 1, on [-4, 4]
///   poly      0.5 x^3 - x^2 + x, on [-2, 2]
///   additive  sin(x1) + 0.5 x2^2, on [-3, 3]^2
///   linear    2 x - 1, on [-3, 3]
std::vector<std::string> synthetic_functions();
std::size_t synthetic_input_dims(std::string_view function);
std::vector<DomainBounds> synthetic_default_domain(std::string_view function);
double synthetic_target(std::string_view function, std::span<const double> x);

/// Inputs uniform over the domain, targets = clean + N(0, noise^2).
SyntheticSample gen_synthetic(const SyntheticSpec& spec);

}  // namespace mmdsvr
