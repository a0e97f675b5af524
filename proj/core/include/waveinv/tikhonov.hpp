#pragma once

#include <span>
#include <string>
#include <vector>

#include "waveinv/forward.hpp"

namespace waveinv {

struct ReconstructionResult {
    Vector coefficients;
    double alpha = 0.0;
    /// ||G_{tau,h} f_h - m||_n
    double residual = 0.0;
    /// ||f_h||_{L^2} = sqrt(c^T M c)
    double source_norm = 0.0;

    struct Diagnostics {
        std::string method;
        int iterations = 0;
        /// ||(alpha M + G) c - a|| / ||a||
        double normal_residual = 0.0;
    } diagnostics;
};

struct TikhonovOptions {
    enum class Method { automatic, direct, conjugate_gradient };
    Method method = Method::automatic;
    /// automatic switches to CG above this many dofs
    int direct_limit = 5000;
    double cg_tolerance = 1e-10;
    int cg_max_iterations = 20000;
};

/// Discrete Tikhonov problem min ||G_{tau,h} f - m||_n^2 + alpha ||f||^2 over
/// V_h, solved through its normal equations (alpha M + G) c = a.
///
/// Holds references to the forward sample and the mass matrix; both must
/// outlive the problem. Solves for different alpha are independent.
class TikhonovProblem {
public:
    TikhonovProblem(const ForwardOperatorSample& sample, const SparseMatrix& mass,
                    std::span<const double> measurements);

    ReconstructionResult solve(double alpha, const TikhonovOptions& options = {}) const;

    /// ||G_{tau,h} f - m||_n^2 + alpha c^T M c
    double objective(const Vector& coefficients, double alpha) const;
    double residual(const Vector& coefficients) const;

    const ForwardOperatorSample& sample() const { return *sample_; }
    const SparseMatrix& mass() const { return *mass_; }
    std::span<const double> measurements() const { return measurements_; }
    const Vector& data_term() const { return data_term_; }
    int num_sensors() const { return static_cast<int>(measurements_.size()); }

private:
    const ForwardOperatorSample* sample_;
    const SparseMatrix* mass_;
    std::vector<double> measurements_;
    Vector data_term_;
    Eigen::Map<const Vector> measurement_view() const;
};

ReconstructionResult solve(const ForwardOperatorSample& sample, const SparseMatrix& mass,
                           std::span<const double> measurements, double alpha,
                           const TikhonovOptions& options = {});

double objective(const ForwardOperatorSample& sample, const SparseMatrix& mass,
                 std::span<const double> measurements, const Vector& coefficients, double alpha);

}  // namespace waveinv
