#include "waveinv/forward.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "waveinv/errors.hpp"

namespace waveinv {

namespace {

constexpr double kClosedFormTolerance = 1e-12;
constexpr double kEstimatedTolerance = 1e-8;
constexpr double kChebyshevWindow = 0.05;
constexpr int kChebyshevPoints = 12;

double falling_factorial(int p, int k) {
    double value = 1.0;
    for (int j = 0; j < k; ++j) {
        value *= p - j;
    }
    return value;
}

// Derivatives at t = 0 of the degree-11 interpolant through Chebyshev points
// of [0, window].
std::array<double, 4> chebyshev_derivatives_at_zero(const TemporalProfile::Function& g) {
    Eigen::Matrix<double, kChebyshevPoints, kChebyshevPoints> vandermonde;
    Eigen::Matrix<double, kChebyshevPoints, 1> samples;
    for (int i = 0; i < kChebyshevPoints; ++i) {
        const double s = 0.5 * (1.0 - std::cos(M_PI * (i + 0.5) / kChebyshevPoints));
        double power = 1.0;
        for (int j = 0; j < kChebyshevPoints; ++j) {
            vandermonde(i, j) = power;
            power *= s;
        }
        samples[i] = g(kChebyshevWindow * s);
    }
    const Eigen::Matrix<double, kChebyshevPoints, 1> monomial = vandermonde.colPivHouseholderQr().solve(samples);
    std::array<double, 4> derivatives{};
    double factorial = 1.0;
    for (int k = 0; k < 4; ++k) {
        if (k > 0) {
            factorial *= k;
        }
        derivatives[k] = factorial * monomial[k] / std::pow(kChebyshevWindow, k);
    }
    return derivatives;
}

}  // namespace

TimeGrid make_time_grid(double final_time, int steps) {
    if (!(final_time > 0.0) || !std::isfinite(final_time)) {
        throw InvalidArgument("make_time_grid: final time must be positive");
    }
    if (steps < 1) {
        throw InvalidArgument("make_time_grid: number of steps must be >= 1");
    }
    return TimeGrid{final_time, steps};
}

TemporalProfile::TemporalProfile(std::string name, Function g, std::array<Function, 4> derivatives)
    : name_(std::move(name)), g_(std::move(g)), derivatives_(std::move(derivatives)) {
    if (!g_) {
        throw InvalidArgument("TemporalProfile: g must be callable");
    }
    const bool closed = std::all_of(derivatives_.begin(), derivatives_.begin() + 3,
                                    [](const Function& d) { return static_cast<bool>(d); });
    if (closed) {
        compatible_ = std::abs(g_(0.0)) <= kClosedFormTolerance;
        for (int k = 1; k <= 3; ++k) {
            compatible_ = compatible_ && std::abs(derivatives_[k - 1](0.0)) <= kClosedFormTolerance;
        }
    } else {
        const auto estimate = chebyshev_derivatives_at_zero(g_);
        compatible_ = std::abs(g_(0.0)) <= kClosedFormTolerance;
        for (int k = 1; k <= 3; ++k) {
            compatible_ = compatible_ && std::abs(estimate[k]) <= kEstimatedTolerance;
        }
    }
}

TemporalProfile TemporalProfile::power(int p) {
    if (p < 0) {
        throw InvalidArgument("TemporalProfile::power: exponent must be non-negative");
    }
    auto derivative = [p](int k) -> Function {
        return [p, k](double t) { return k > p ? 0.0 : falling_factorial(p, k) * std::pow(t, p - k); };
    };
    TemporalProfile profile("t^" + std::to_string(p), [p](double t) { return std::pow(t, p); },
                            {derivative(1), derivative(2), derivative(3), derivative(4)});
    profile.exponent_ = p;
    return profile;
}

std::optional<double> TemporalProfile::derivative(int k, double t) const {
    if (k < 1 || k > 4) {
        throw InvalidArgument("TemporalProfile::derivative: order must be in 1..4");
    }
    if (!derivatives_[k - 1]) {
        return std::nullopt;
    }
    return derivatives_[k - 1](t);
}

double TemporalProfile::derivative_at_zero(int k) const {
    if (k == 0) {
        return g_(0.0);
    }
    if (auto exact = derivative(k, 0.0)) {
        return *exact;
    }
    if (k > 3) {
        throw InvalidArgument("TemporalProfile::derivative_at_zero: estimates only for orders 0..3");
    }
    return chebyshev_derivatives_at_zero(g_)[k];
}

ForwardSolver::ForwardSolver(const FEMatrices& matrices, TimeGrid grid, TemporalProfile profile)
    : mass_(matrices.mass), stiffness_(matrices.stiffness), grid_(grid), profile_(std::move(profile)) {
    if (mass_.rows() != mass_.cols() || stiffness_.rows() != mass_.rows() || stiffness_.cols() != mass_.cols()) {
        throw InvalidArgument("ForwardSolver: mass and stiffness matrices have incompatible shapes");
    }
    if (grid_.steps < 1 || !(grid_.final_time > 0.0)) {
        throw InvalidArgument("ForwardSolver: invalid time grid");
    }
    if (!profile_.compatible()) {
        throw InvalidArgument("ForwardSolver: temporal profile '" + profile_.name() +
                              "' violates g^(k)(0) = 0 for k = 0..3");
    }
    const double tau = grid_.step();
    const SparseMatrix system = mass_ + (0.25 * tau * tau) * stiffness_;
    auto factor = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(system);
    if (factor->info() != Eigen::Success || (factor->vectorD().array() <= 0.0).any()) {
        throw NumericalError("ForwardSolver: M + (tau^2/4) K is not symmetric positive definite");
    }
    step_factor_ = std::move(factor);
    g_values_.resize(static_cast<std::size_t>(grid_.steps) + 1);
    for (int i = 0; i <= grid_.steps; ++i) {
        const double g = profile_.value(grid_.node(i));
        if (!std::isfinite(g)) {
            throw NumericalError("ForwardSolver: g(" + std::to_string(grid_.node(i)) + ") of profile '" +
                                 profile_.name() + "' is not finite");
        }
        g_values_[static_cast<std::size_t>(i)] = g;
    }
}

ForwardState ForwardSolver::solve(const Vector& source, std::optional<int> steps) const {
    if (source.size() != num_dofs()) {
        throw InvalidArgument("ForwardSolver::solve: source has " + std::to_string(source.size()) +
                              " coefficients, mesh has " + std::to_string(num_dofs()) + " dofs");
    }
    const int last = steps.value_or(grid_.steps);
    if (last < 0 || last > grid_.steps) {
        throw InvalidArgument("ForwardSolver::solve: step count out of range");
    }
    const double tau = grid_.step();
    const Vector load = mass_ * source;
    ForwardState state{Vector::Zero(num_dofs()), Vector::Zero(num_dofs())};
    double g_previous = g_values_[0];
    for (int i = 1; i <= last; ++i) {
        const double g_current = g_values_[static_cast<std::size_t>(i)];
        const Vector rhs = mass_ * (state.displacement + tau * state.velocity) -
                           (0.25 * tau * tau) * (stiffness_ * state.displacement) +
                           (0.25 * tau * tau * (g_current + g_previous)) * load;
        Vector next = step_factor_->solve(rhs);
        state.velocity = (2.0 / tau) * (next - state.displacement) - state.velocity;
        state.displacement = std::move(next);
        g_previous = g_current;
    }
    return state;
}

Vector ForwardSolver::final_state(const Vector& source) const { return solve(source).displacement; }

Matrix ForwardSolver::final_states(const Matrix& sources) const {
    if (sources.rows() != num_dofs()) {
        throw InvalidArgument("ForwardSolver::final_states: sources have wrong row count");
    }
    const double tau = grid_.step();
    const Matrix load = mass_ * sources;
    Matrix displacement = Matrix::Zero(sources.rows(), sources.cols());
    Matrix velocity = Matrix::Zero(sources.rows(), sources.cols());
    double g_previous = g_values_[0];
    for (int i = 1; i <= grid_.steps; ++i) {
        const double g_current = g_values_[static_cast<std::size_t>(i)];
        Matrix rhs = mass_ * (displacement + tau * velocity);
        rhs -= (0.25 * tau * tau) * (stiffness_ * displacement);
        rhs += (0.25 * tau * tau * (g_current + g_previous)) * load;
        Matrix next = step_factor_->solve(rhs);
        velocity = (2.0 / tau) * (next - displacement) - velocity;
        displacement = std::move(next);
        g_previous = g_current;
    }
    return displacement;
}

Vector step_scheme(const FEMatrices& matrices, const TimeGrid& grid, const TemporalProfile& profile,
                   const Vector& source) {
    return ForwardSolver(matrices, grid, profile).final_state(source);
}

SparseMatrix sampling_matrix(const Mesh& mesh, const SensorSet& sensors) {
    if (sensors.dimension != mesh.dimension()) {
        throw InvalidArgument("sampling_matrix: sensor and mesh dimensions differ");
    }
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(sensors.size() * mesh.vertices_per_element());
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        const Point& p = sensors.points[i];
        const bool interior = p.x > 0.0 && p.x < 1.0 && (mesh.dimension() == 1 || (p.y > 0.0 && p.y < 1.0));
        if (!interior) {
            throw InvalidArgument("sampling_matrix: sensor " + std::to_string(i) + " is not strictly inside the domain");
        }
        const Mesh::Location location = mesh.locate(p);
        for (int k = 0; k < location.count; ++k) {
            if (location.dofs[k] >= 0 && location.weights[k] != 0.0) {
                entries.emplace_back(static_cast<int>(i), location.dofs[k], location.weights[k]);
            }
        }
    }
    SparseMatrix sampling(static_cast<Eigen::Index>(sensors.size()), mesh.num_dofs());
    sampling.setFromTriplets(entries.begin(), entries.end());
    sampling.makeCompressed();
    return sampling;
}

std::vector<double> apply_forward(const ForwardSolver& solver, const Mesh& mesh, const Vector& source,
                                  const SensorSet& sensors) {
    const SparseMatrix sampling = sampling_matrix(mesh, sensors);
    const Vector values = sampling * solver.final_state(source);
    return {values.data(), values.data() + values.size()};
}

Vector ForwardOperatorSample::data_term(std::span<const double> measurements) const {
    if (static_cast<int>(measurements.size()) != num_sensors()) {
        throw InvalidArgument("data_term: measurement count does not match the sensor count");
    }
    const Eigen::Map<const Vector> m(measurements.data(), static_cast<Eigen::Index>(measurements.size()));
    const double scale = 1.0 / num_sensors();
    if (sensor_matrix) {
        return scale * (sensor_matrix->transpose() * m);
    }
    const Vector projected = sampling.transpose() * m;
    return scale * (response.transpose() * projected);
}

Vector ForwardOperatorSample::sensor_values(const Vector& coefficients) const {
    if (coefficients.size() != num_dofs()) {
        throw InvalidArgument("sensor_values: coefficient vector has wrong length");
    }
    if (sensor_matrix) {
        return *sensor_matrix * coefficients;
    }
    const Vector nodal = response * coefficients;
    return sampling * nodal;
}

Matrix forward_response(const ForwardSolver& solver, const GramOptions& options) {
    if (options.block_columns < 1 || options.threads < 1) {
        throw InvalidArgument("forward_response: block size and thread count must be positive");
    }
    const int dofs = solver.num_dofs();
    Matrix response(dofs, dofs);
    const int block = options.block_columns;
    const int blocks = (dofs + block - 1) / block;
    auto run_block = [&](int b) {
        const int first = b * block;
        const int width = std::min(block, dofs - first);
        Matrix unit = Matrix::Zero(dofs, width);
        for (int j = 0; j < width; ++j) {
            unit(first + j, j) = 1.0;
        }
        response.middleCols(first, width) = solver.final_states(unit);
    };
    const int workers = std::min(options.threads, blocks);
    if (workers <= 1) {
        for (int b = 0; b < blocks; ++b) {
            run_block(b);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int b = w; b < blocks; b += workers) {
                    run_block(b);
                }
            });
        }
        for (auto& thread : pool) {
            thread.join();
        }
    }
    return response;
}

ForwardOperatorSample sample_forward(Matrix response, const Mesh& mesh, const SensorSet& sensors,
                                     GramStorage storage) {
    if (response.rows() != mesh.num_dofs() || response.cols() != mesh.num_dofs()) {
        throw InvalidArgument("sample_forward: response matrix does not match the mesh dofs");
    }
    ForwardOperatorSample sample;
    sample.sampling = sampling_matrix(mesh, sensors);
    sample.response = std::move(response);
    const double n = static_cast<double>(sensors.size());
    const double dofs = static_cast<double>(mesh.num_dofs());
    bool store = false;
    switch (storage) {
        case GramStorage::automatic:
            store = n * dofs <= ForwardOperatorSample::dense_entry_limit;
            break;
        case GramStorage::store_sensor_matrix:
            store = true;
            break;
        case GramStorage::accumulate_only:
            store = false;
            break;
    }
    if (store) {
        Matrix sensor_matrix = sample.sampling * sample.response;
        sample.gram = (sensor_matrix.transpose() * sensor_matrix) / n;
        sample.sensor_matrix = std::move(sensor_matrix);
    } else {
        const SparseMatrix normal = SparseMatrix(sample.sampling.transpose()) * sample.sampling;
        const Matrix weighted = normal * sample.response;
        sample.gram = (sample.response.transpose() * weighted) / n;
    }
    sample.gram = 0.5 * (sample.gram + sample.gram.transpose()).eval();
    return sample;
}

ForwardOperatorSample assemble_forward_gram(const ForwardSolver& solver, const Mesh& mesh,
                                            const SensorSet& sensors, const GramOptions& options) {
    if (solver.num_dofs() != mesh.num_dofs()) {
        throw InvalidArgument("assemble_forward_gram: solver and mesh dof counts differ");
    }
    // validate the sensors before the expensive part
    (void)sampling_matrix(mesh, sensors);
    return sample_forward(forward_response(solver, options), mesh, sensors, options.storage);
}

}  // namespace waveinv
