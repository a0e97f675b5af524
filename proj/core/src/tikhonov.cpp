#include "waveinv/tikhonov.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "waveinv/errors.hpp"

namespace waveinv {

namespace {

struct CgOutcome {
    Vector solution;
    int iterations = 0;
};

// Preconditioned CG on the dense SPD system, preconditioned by M^{-1}.
CgOutcome mass_preconditioned_cg(const Matrix& system, const SparseMatrix& mass, const Vector& rhs,
                                 double tolerance, int max_iterations) {
    Eigen::SimplicialLDLT<SparseMatrix> preconditioner(mass);
    if (preconditioner.info() != Eigen::Success) {
        throw NumericalError("Tikhonov CG: mass matrix factorization failed");
    }
    CgOutcome outcome;
    outcome.solution = Vector::Zero(rhs.size());
    Vector residual = rhs;
    const double target = tolerance * rhs.norm();
    if (rhs.norm() == 0.0) {
        return outcome;
    }
    Vector z = preconditioner.solve(residual);
    Vector direction = z;
    double rz = residual.dot(z);
    for (int it = 1; it <= max_iterations; ++it) {
        const Vector q = system * direction;
        const double curvature = direction.dot(q);
        if (!(curvature > 0.0)) {
            throw NumericalError("Tikhonov CG: system is not positive definite");
        }
        const double step = rz / curvature;
        outcome.solution += step * direction;
        residual -= step * q;
        outcome.iterations = it;
        if (residual.norm() <= target) {
            return outcome;
        }
        z = preconditioner.solve(residual);
        const double rz_next = residual.dot(z);
        direction = z + (rz_next / rz) * direction;
        rz = rz_next;
    }
    throw NumericalError("Tikhonov CG: no convergence after " + std::to_string(max_iterations) + " iterations");
}

}  // namespace

TikhonovProblem::TikhonovProblem(const ForwardOperatorSample& sample, const SparseMatrix& mass,
                                 std::span<const double> measurements)
    : sample_(&sample), mass_(&mass), measurements_(measurements.begin(), measurements.end()) {
    if (mass.rows() != sample.num_dofs() || mass.cols() != sample.num_dofs()) {
        throw InvalidArgument("TikhonovProblem: mass matrix does not match the forward sample");
    }
    if (static_cast<int>(measurements_.size()) != sample.num_sensors()) {
        throw InvalidArgument("TikhonovProblem: " + std::to_string(measurements_.size()) +
                              " measurements for " + std::to_string(sample.num_sensors()) + " sensors");
    }
    data_term_ = sample.data_term(measurements_);
}

Eigen::Map<const Vector> TikhonovProblem::measurement_view() const {
    return {measurements_.data(), static_cast<Eigen::Index>(measurements_.size())};
}

double TikhonovProblem::residual(const Vector& coefficients) const {
    const Vector misfit = sample_->sensor_values(coefficients) - measurement_view();
    return std::sqrt(misfit.squaredNorm() / static_cast<double>(measurements_.size()));
}

double TikhonovProblem::objective(const Vector& coefficients, double alpha) const {
    const double r = residual(coefficients);
    return r * r + alpha * coefficients.dot(*mass_ * coefficients);
}

ReconstructionResult TikhonovProblem::solve(double alpha, const TikhonovOptions& options) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw InvalidArgument("Tikhonov solve: alpha must be positive, got " + std::to_string(alpha));
    }
    const int dofs = sample_->num_dofs();
    Matrix system = sample_->gram;
    system += alpha * Matrix(*mass_);

    bool direct = options.method == TikhonovOptions::Method::direct;
    if (options.method == TikhonovOptions::Method::automatic) {
        direct = dofs <= options.direct_limit;
    }

    ReconstructionResult result;
    result.alpha = alpha;
    if (direct) {
        const Eigen::LLT<Matrix> factor(system);
        if (factor.info() != Eigen::Success) {
            throw NumericalError("Tikhonov solve: alpha M + G is not positive definite");
        }
        result.coefficients = factor.solve(data_term_);
        // one step of iterative refinement
        const Vector correction = factor.solve(data_term_ - system * result.coefficients);
        result.coefficients += correction;
        result.diagnostics.method = "cholesky";
        result.diagnostics.iterations = 1;
    } else {
        CgOutcome outcome = mass_preconditioned_cg(system, *mass_, data_term_, options.cg_tolerance,
                                                   options.cg_max_iterations);
        result.coefficients = std::move(outcome.solution);
        result.diagnostics.method = "pcg";
        result.diagnostics.iterations = outcome.iterations;
    }
    const double scale = data_term_.norm();
    const double normal = (system * result.coefficients - data_term_).norm();
    result.diagnostics.normal_residual = scale > 0.0 ? normal / scale : normal;
    result.residual = residual(result.coefficients);
    result.source_norm = std::sqrt(std::max(0.0, result.coefficients.dot(*mass_ * result.coefficients)));
    return result;
}

ReconstructionResult solve(const ForwardOperatorSample& sample, const SparseMatrix& mass,
                           std::span<const double> measurements, double alpha, const TikhonovOptions& options) {
    return TikhonovProblem(sample, mass, measurements).solve(alpha, options);
}

double objective(const ForwardOperatorSample& sample, const SparseMatrix& mass, std::span<const double> measurements,
                 const Vector& coefficients, double alpha) {
    return TikhonovProblem(sample, mass, measurements).objective(coefficients, alpha);
}

}  // namespace waveinv
