#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Dense>

#include "mmdsvr/dataset.hpp"

namespace mmdsvr {

enum class KernelKind { linear, rbf };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

/// linear: <x, z>
/// rbf:    exp(-|x - z|^2 / (2 w^2)) with w = width
/// With bias_augment every value gets +1, which absorbs the bias term of the
/// regression function into the kernel expansion.
struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double width = 1.0;
    bool bias_augment = true;

    void validate() const;
};

double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> z);

/// Dense symmetric matrix of pairwise kernel values.
struct GramMatrix {
    Eigen::MatrixXd values;
    KernelSpec spec;

    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
};

GramMatrix gram(const KernelSpec& spec, const RowMatrix& X);

/// K(a_i, b_j) for every row of `a` against every row of `b`.
Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const RowMatrix& a, const RowMatrix& b);

/// Mean Euclidean distance over all unordered pairs of rows. Needs n >= 2.
double avg_pairwise_distance(const RowMatrix& X);

/// Read-only view of one kernel row. Keeps a cached row alive while in use.
class KernelRow {
public:
    KernelRow(const double* data, std::size_t n, std::shared_ptr<const Eigen::VectorXd> owner = {})
        : owner_(std::move(owner)), data_(data), size_(n) {}

    double operator[](std::size_t j) const { return data_[j]; }
    std::size_t size() const { return size_; }
    std::span<const double> span() const { return {data_, size_}; }
    Eigen::Map<const Eigen::VectorXd> vector() const {
        return {data_, static_cast<Eigen::Index>(size_)};
    }

private:
    std::shared_ptr<const Eigen::VectorXd> owner_;
    const double* data_;
    std::size_t size_;
};

/// Row access to a kernel matrix, the only view the dual solvers need.
class KernelRows {
public:
    virtual ~KernelRows() = default;
    virtual std::size_t size() const = 0;
    virtual double diag(std::size_t i) const = 0;
    virtual KernelRow row(std::size_t i) const = 0;

    /// c' K c
    double quadratic_form(const Eigen::VectorXd& c) const;
    /// K c
    Eigen::VectorXd multiply(const Eigen::VectorXd& c) const;
};

/// Fully materialized kernel matrix. Also accepts an arbitrary symmetric
/// matrix, which the tests use to drive the solvers directly.
class DenseKernelRows final : public KernelRows {
public:
    explicit DenseKernelRows(Eigen::MatrixXd K);
    explicit DenseKernelRows(GramMatrix g) : DenseKernelRows(std::move(g.values)) {}

    std::size_t size() const override { return static_cast<std::size_t>(K_.rows()); }
    double diag(std::size_t i) const override { return K_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)); }
    KernelRow row(std::size_t i) const override {
        // column-major and symmetric: column i is row i
        return {K_.col(static_cast<Eigen::Index>(i)).data(), size()};
    }
    const Eigen::MatrixXd& matrix() const { return K_; }

private:
    Eigen::MatrixXd K_;
};

/// Computes rows on demand and keeps the most recently used ones. Cache
/// mutation is serialized internally, so one instance may be shared by
/// several readers.
class CachedKernelRows final : public KernelRows {
public:
    CachedKernelRows(KernelSpec spec, RowMatrix X, std::size_t max_rows);

    std::size_t size() const override { return static_cast<std::size_t>(X_.rows()); }
    double diag(std::size_t i) const override { return diag_(static_cast<Eigen::Index>(i)); }
    KernelRow row(std::size_t i) const override;

    std::size_t cached_rows() const;

private:
    using Entry = std::pair<std::size_t, std::shared_ptr<const Eigen::VectorXd>>;

    KernelSpec spec_;
    RowMatrix X_;
    Eigen::VectorXd diag_;
    std::size_t max_rows_;
    mutable std::mutex mutex_;
    mutable std::list<Entry> lru_;
    mutable std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

inline constexpr std::size_t kDefaultDenseKernelCap = 4096;

/// Dense for n <= dense_cap, otherwise an LRU row cache holding `cache_rows` rows.
std::unique_ptr<KernelRows> make_kernel_rows(const KernelSpec& spec, const RowMatrix& X,
                                             std::size_t dense_cap = kDefaultDenseKernelCap,
                                             std::size_t cache_rows = 1024);

}  // namespace mmdsvr
