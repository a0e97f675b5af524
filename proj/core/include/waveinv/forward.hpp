#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "waveinv/measure.hpp"
#include "waveinv/mesh.hpp"

namespace waveinv {

/// Uniform time grid t^i = i * T / N.
struct TimeGrid {
    double final_time = 1.0;
    int steps = 1;

    double step() const { return final_time / steps; }
    double node(int i) const { return final_time * i / steps; }
};

/// Throws InvalidArgument unless T > 0 and N >= 1.
TimeGrid make_time_grid(double final_time, int steps);

/// Temporal factor g(t) of the separable source f(x) g(t).
///
/// The scheme needs g^(k)(0) = 0 for k = 0..3. When closed-form derivatives
/// are supplied they are checked at 1e-12; otherwise the derivatives at zero
/// are estimated from a degree-11 Chebyshev interpolant on [0, 0.05] and
/// checked against a tolerance of 1e-8.
class TemporalProfile {
public:
    using Function = std::function<double(double)>;

    TemporalProfile(std::string name, Function g, std::array<Function, 4> derivatives = {});

    /// g(t) = t^p with closed-form derivatives; p >= 0.
    static TemporalProfile power(int p);

    const std::string& name() const { return name_; }
    double value(double t) const { return g_(t); }
    /// k-th derivative (k = 1..4) when a closed form was supplied.
    std::optional<double> derivative(int k, double t) const;
    /// Closed form when available, Chebyshev estimate otherwise.
    double derivative_at_zero(int k) const;
    bool compatible() const { return compatible_; }
    /// Exponent p for profiles built with power(p).
    std::optional<int> power_exponent() const { return exponent_; }

private:
    std::string name_;
    Function g_;
    std::array<Function, 4> derivatives_;
    std::optional<int> exponent_;
    bool compatible_ = false;
};

/// Coefficients of the displacement u_h^i and the velocity variable q_h^i.
struct ForwardState {
    Vector displacement;
    Vector velocity;
};

/// Two-field averaged scheme on the interior dofs:
///
///   M (q^i - q^{i-1}) / tau + K (u^i + u^{i-1}) / 2 = M f (g^i + g^{i-1}) / 2
///   (u^i - u^{i-1}) / tau = (q^i + q^{i-1}) / 2
///
/// Substituting the second equation gives one solve with M + (tau^2/4) K per
/// step; that matrix is factorized once at construction. Instances are
/// immutable and may be shared between threads.
class ForwardSolver {
public:
    ForwardSolver(const FEMatrices& matrices, TimeGrid grid, TemporalProfile profile);

    const TimeGrid& grid() const { return grid_; }
    const TemporalProfile& profile() const { return profile_; }
    int num_dofs() const { return static_cast<int>(mass_.rows()); }

    /// State after `steps` steps (default: N) for source coefficients f.
    ForwardState solve(const Vector& source, std::optional<int> steps = std::nullopt) const;

    /// u_h^N for source coefficients f.
    Vector final_state(const Vector& source) const;

    /// u_h^N for every column of `sources`.
    Matrix final_states(const Matrix& sources) const;

private:
    SparseMatrix mass_;
    SparseMatrix stiffness_;
    TimeGrid grid_;
    TemporalProfile profile_;
    std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> step_factor_;
    std::vector<double> g_values_;  // g(t^i), i = 0..N
};

/// u_h^N for source coefficients f (builds a solver for a single use).
Vector step_scheme(const FEMatrices& matrices, const TimeGrid& grid, const TemporalProfile& profile,
                   const Vector& source);

/// n x N_h matrix of P1 interpolation weights at the sensors. Throws
/// InvalidArgument for sensors outside the open domain.
SparseMatrix sampling_matrix(const Mesh& mesh, const SensorSet& sensors);

/// Sensor values of G_{tau,h} f.
std::vector<double> apply_forward(const ForwardSolver& solver, const Mesh& mesh, const Vector& source,
                                  const SensorSet& sensors);

enum class GramStorage {
    automatic,          // keep A when n * N_h <= dense_entry_limit
    store_sensor_matrix,
    accumulate_only,
};

/// The discrete forward map sampled at the sensors.
///
/// `response` holds G_{tau,h} phi_j (nodal values) in column j. The sensor
/// matrix A = P * response is kept only when requested; the Gram matrix
/// (1/n) A^T A is always formed, in accumulate mode as (1/n) R^T (P^T P) R.
struct ForwardOperatorSample {
    static constexpr double dense_entry_limit = 2e7;

    Matrix response;
    SparseMatrix sampling;
    std::optional<Matrix> sensor_matrix;
    Matrix gram;

    int num_sensors() const { return static_cast<int>(sampling.rows()); }
    int num_dofs() const { return static_cast<int>(response.cols()); }

    /// (1/n) A^T m.
    Vector data_term(std::span<const double> measurements) const;
    /// Sensor values of G_{tau,h} c.
    Vector sensor_values(const Vector& coefficients) const;
};

struct GramOptions {
    GramStorage storage = GramStorage::automatic;
    /// Worker threads for the basis-column solves; columns are independent so
    /// results do not depend on this value.
    int threads = 1;
    int block_columns = 64;
};

/// G_{tau,h} phi_j for every basis function, one time-stepping run per column
/// sharing the solver's factorization.
Matrix forward_response(const ForwardSolver& solver, const GramOptions& options = {});

/// Samples a precomputed response matrix at the sensors. Lets several sensor
/// sets share one set of forward runs.
ForwardOperatorSample sample_forward(Matrix response, const Mesh& mesh, const SensorSet& sensors,
                                     GramStorage storage = GramStorage::automatic);

ForwardOperatorSample assemble_forward_gram(const ForwardSolver& solver, const Mesh& mesh,
                                            const SensorSet& sensors, const GramOptions& options = {});

}  // namespace waveinv
