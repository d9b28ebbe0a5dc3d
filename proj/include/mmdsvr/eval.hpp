#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmdsvr/dataset.hpp"
#include "mmdsvr/kernel.hpp"
#include "mmdsvr/mmd.hpp"
#include "mmdsvr/model.hpp"
#include "mmdsvr/svr.hpp"

namespace mmdsvr {

/// Element at index floor((n-1)/2) of the sorted values.
double lower_median(std::vector<double> values);

/// Median-based coefficient of determination
///   R^2 = 1 - (med|y - f| / med|y - med(y)|)^2
/// using the lower median. Returns nullopt when the denominator is zero.
std::optional<double> r2(std::span<const double> predictions, std::span<const double> targets);

/// One point of a hyperparameter search, with the kernel width either
/// absolute or a multiple of the mean pairwise distance of the normalized
/// training instances.
struct HyperParams {
    Algorithm algorithm = Algorithm::svr;
    double epsilon = 0.1;
    double c = 1.0;   ///< svr
    double c1 = 1.0;  ///< mmd
    double c2 = 1.0;  ///< mmd
    double mu = 0.5;  ///< mmd
    KernelKind kernel = KernelKind::rbf;
    double width = 1.0;
    bool width_relative = true;
    bool bias_augment = true;
    SolverControls solver;
    double backtrack_ratio = 0.5;
    int max_backtrack = 30;

    /// `delta` is the mean pairwise distance of the training instances.
    KernelSpec kernel_spec(double delta) const;
    SVRParams svr_params(double delta) const;
    MMDParams mmd_params(double delta) const;
    void validate() const;
};

/// Mean pairwise distance used for relative widths; 1 when it is undefined or zero.
double width_reference(const RowMatrix& normalized_train);

/// Fits the normalizer on `train`, trains on the normalized data and returns a
/// model that predicts from raw instances. `trace` receives the per-epoch
/// solver trace (mmd only).
Model fit_model(const Dataset& train, const HyperParams& hp, SolveReport* report = nullptr,
                std::ostream* trace = nullptr);

struct CVResult {
    HyperParams params;
    std::size_t folds = 0;
    std::size_t repeats = 0;
    /// Fold scores in (repeat, fold) order; nullopt where R^2 was undefined.
    std::vector<std::optional<double>> scores;
    double mean = 0.0;  ///< Over defined fold scores.
    double std = 0.0;   ///< Sample standard deviation of the defined fold scores.
    std::size_t n_undefined = 0;
    std::vector<double> repeat_means;
    double repeat_mean = 0.0;
    double repeat_std = 0.0;
    std::size_t non_converged = 0;  ///< Fold trainings that hit max_epochs.
};

/// Seed of the fold split for repeat r.
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat);

/// Repeated k-fold cross-validation. The normalizer is fit on each training
/// portion only.
CVResult cross_validate(const Dataset& d, const HyperParams& hp, std::size_t folds = 5,
                        std::size_t repeats = 10, std::uint64_t seed = 0);

struct GridSpec {
    std::vector<double> epsilon;
    std::vector<double> c;
    std::vector<double> c1;
    std::vector<double> c2;
    std::vector<double> mu;
    std::vector<double> width;  ///< Multipliers of the mean pairwise distance (or absolute widths).

    /// Grids used by the reference experiments; eps defaults to {0.01, 0.05, 0.1, 0.2}.
    static GridSpec defaults(Algorithm algo);

    void validate(Algorithm algo) const;

    /// Enumeration order: eps, then C (svr) or C1, C2, mu (mmd), then width.
    /// With a linear kernel only the first width is used.
    std::vector<HyperParams> enumerate(const HyperParams& base) const;
};

struct GridResult {
    std::vector<CVResult> rows;
    std::size_t best = 0;

    const CVResult& best_result() const { return rows.at(best); }
};

/// Cross-validates every grid point on the same folds and picks the highest
/// mean R^2; ties go to the earliest point. Kernel matrices are shared between
/// grid points with the same width.
GridResult grid_search(const Dataset& d, const GridSpec& grid, const HyperParams& base, std::size_t folds,
                       std::size_t repeats, std::uint64_t seed);

/// One row per grid point: params..., mean, std, n_undefined.
void write_grid_csv(std::ostream& out, const GridResult& g);
/// One row per fold score: repeat, fold, r2 (empty when undefined).
void write_scores_csv(std::ostream& out, const CVResult& r);

enum class Direction { none, a, b };

struct TTestResult {
    double t = 0.0;
    std::size_t df = 0;
    double critical = 0.0;
    double mean_difference = 0.0;  ///< mean(a - b)
    bool significant = false;
    Direction direction = Direction::none;  ///< Which sample has the higher mean.
};

/// Two-sided critical value of Student's t. Supported levels: 0.90, 0.95,
/// 0.99. Degrees of freedom missing from the table fall back to the closest
/// smaller tabulated value, which is conservative.
double t_critical(std::size_t df, double level = 0.95);

/// Paired two-sided t-test on a - b. Zero-variance differences are significant
/// iff their mean is nonzero.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double level = 0.95);

}  // namespace mmdsvr
