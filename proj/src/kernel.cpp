#include "mmdsvr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmdsvr {

std::string_view to_string(KernelKind kind) {
    return kind == KernelKind::linear ? "linear" : "rbf";
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "rbf") return KernelKind::rbf;
    throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
    if (kind == KernelKind::rbf && !(width > 0.0 && std::isfinite(width)))
        throw std::invalid_argument("rbf width must be a finite value > 0");
}

double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> z) {
    if (x.size() != z.size())
        throw std::invalid_argument("kernel arguments have dimensions " + std::to_string(x.size()) +
                                    " and " + std::to_string(z.size()));
    double value = 0.0;
    if (spec.kind == KernelKind::linear) {
        for (std::size_t j = 0; j < x.size(); ++j) value += x[j] * z[j];
    } else {
        double sq = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - z[j];
            sq += diff * diff;
        }
        value = std::exp(-sq / (2.0 * spec.width * spec.width));
    }
    return spec.bias_augment ? value + 1.0 : value;
}

namespace {

std::span<const double> row_span(const RowMatrix& X, Eigen::Index i) {
    return {X.row(i).data(), static_cast<std::size_t>(X.cols())};
}

}  // namespace

GramMatrix gram(const KernelSpec& spec, const RowMatrix& X) {
    spec.validate();
    const Eigen::Index n = X.rows();
    if (n < 1) throw std::invalid_argument("gram matrix of an empty instance set");
    GramMatrix g{Eigen::MatrixXd(n, n), spec};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto xi = row_span(X, i);
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = eval_kernel(spec, xi, row_span(X, j));
            g.values(i, j) = v;
            g.values(j, i) = v;
        }
    }
    return g;
}

Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const RowMatrix& a, const RowMatrix& b) {
    spec.validate();
    Eigen::MatrixXd out(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            out(i, j) = eval_kernel(spec, row_span(a, i), row_span(b, j));
    return out;
}

double avg_pairwise_distance(const RowMatrix& X) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw std::invalid_argument("average pairwise distance needs at least 2 instances");
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) total += (X.row(i) - X.row(j)).norm();
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return total / pairs;
}

double KernelRows::quadratic_form(const Eigen::VectorXd& c) const {
    double total = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double ci = c(static_cast<Eigen::Index>(i));
        if (ci != 0.0) total += ci * row(i).vector().dot(c);
    }
    return total;
}

Eigen::VectorXd KernelRows::multiply(const Eigen::VectorXd& c) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) {
        const double ci = c(static_cast<Eigen::Index>(i));
        if (ci != 0.0) out += ci * row(i).vector();
    }
    return out;
}

DenseKernelRows::DenseKernelRows(Eigen::MatrixXd K) : K_(std::move(K)) {
    if (K_.rows() != K_.cols()) throw std::invalid_argument("kernel matrix must be square");
}

CachedKernelRows::CachedKernelRows(KernelSpec spec, RowMatrix X, std::size_t max_rows)
    : spec_(spec), X_(std::move(X)), max_rows_(std::max<std::size_t>(max_rows, 1)) {
    spec_.validate();
    diag_.resize(X_.rows());
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
        const auto xi = row_span(X_, i);
        diag_(i) = eval_kernel(spec_, xi, xi);
    }
}

KernelRow CachedKernelRows::row(std::size_t i) const {
    const auto n = size();
    {
        std::lock_guard lock(mutex_);
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            const auto& owner = it->second->second;
            return {owner->data(), n, owner};
        }
    }
    auto fresh = std::make_shared<Eigen::VectorXd>(static_cast<Eigen::Index>(n));
    const auto xi = row_span(X_, static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < n; ++j)
        (*fresh)(static_cast<Eigen::Index>(j)) = eval_kernel(spec_, xi, row_span(X_, static_cast<Eigen::Index>(j)));
    std::shared_ptr<const Eigen::VectorXd> owner = std::move(fresh);

    std::lock_guard lock(mutex_);
    if (auto it = index_.find(i); it != index_.end()) {
        // another reader filled it meanwhile
        lru_.splice(lru_.begin(), lru_, it->second);
        const auto& existing = it->second->second;
        return {existing->data(), n, existing};
    }
    lru_.emplace_front(i, owner);
    index_[i] = lru_.begin();
    while (lru_.size() > max_rows_) {
        index_.erase(lru_.back().first);
        lru_.pop_back();
    }
    return {owner->data(), n, owner};
}

std::size_t CachedKernelRows::cached_rows() const {
    std::lock_guard lock(mutex_);
    return lru_.size();
}

std::unique_ptr<KernelRows> make_kernel_rows(const KernelSpec& spec, const RowMatrix& X,
                                             std::size_t dense_cap, std::size_t cache_rows) {
    if (static_cast<std::size_t>(X.rows()) <= dense_cap)
        return std::make_unique<DenseKernelRows>(gram(spec, X));
    return std::make_unique<CachedKernelRows>(spec, X, cache_rows);
}

}  // namespace mmdsvr
