#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

#include "mmdsvr/dataset.hpp"
#include "mmdsvr/kernel.hpp"

namespace mmdsvr {

enum class Algorithm { svr, mmd };

std::string_view to_string(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

/// Trained predictor f(x) = sum_i c_i k(s_i, norm(x)) + b.
///
/// Support instances are stored in normalized coordinates; predict() takes raw
/// instances and applies the stored normalization first.
struct Model {
    Algorithm algorithm = Algorithm::svr;
    KernelSpec kernel;
    NormalizationParams normalization;
    RowMatrix support;
    Eigen::VectorXd coefficients;
    double bias = 0.0;
    bool converged = false;

    std::size_t dims() const { return normalization.dims(); }
    std::size_t support_size() const { return static_cast<std::size_t>(support.rows()); }

    double predict(std::span<const double> raw) const;
    Eigen::VectorXd predict(const RowMatrix& raw) const;
    /// Prediction for an instance that is already normalized.
    double predict_normalized(std::span<const double> x) const;

    void validate() const;
};

/// Keeps only the instances with a nonzero coefficient.
Model make_model(Algorithm algo, const KernelSpec& kernel, NormalizationParams normalization,
                 const RowMatrix& normalized_instances, const Eigen::VectorXd& coefficients,
                 bool converged);

class ModelFormatError : public std::runtime_error {
public:
    enum class Kind { not_a_model, unsupported_version, truncated, malformed };

    ModelFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Line-oriented text format:
///
///   MMDSVR-MODEL v1
///   algorithm <svr|mmd> converged <0|1> bias <b>
///   kernel <linear|rbf> <width> <bias_augment 0|1>
///   d <d>
///   min <d values>
///   max <d values>
///   m <m>
///   <c_i>, <x_i1>, ..., <x_id>      (m lines)
///
/// Reals are printed with 17 significant digits, so load(save(m)) predicts
/// bit-identically to m.
void write_model(std::ostream& out, const Model& m);
Model read_model(std::istream& in);
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace mmdsvr
