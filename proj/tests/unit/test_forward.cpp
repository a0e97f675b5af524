#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "waveinv/errors.hpp"
#include "waveinv/forward.hpp"
#include "waveinv/spectral_oracle.hpp"

using namespace waveinv;

namespace {

// T^4/mu - 12 T^2/mu^2 + 24 (1 - cos(sqrt(mu) T))/mu^3, typed independently of the library
double duhamel_t4(double mu, double T) {
    return std::pow(T, 4) / mu - 12 * T * T / (mu * mu) + 24 * (1 - std::cos(std::sqrt(mu) * T)) / (mu * mu * mu);
}

// u'' + mu u = t^4, u(0) = u'(0) = 0, by classical RK4
double ode_final_value(double mu, double T, int steps) {
    double u = 0, v = 0;
    const double dt = T / steps;
    auto acc = [mu](double t, double x) { return std::pow(t, 4) - mu * x; };
    for (int i = 0; i < steps; ++i) {
        const double t = i * dt;
        const double k1u = v, k1v = acc(t, u);
        const double k2u = v + 0.5 * dt * k1v, k2v = acc(t + 0.5 * dt, u + 0.5 * dt * k1u);
        const double k3u = v + 0.5 * dt * k2v, k3v = acc(t + 0.5 * dt, u + 0.5 * dt * k2u);
        const double k4u = v + dt * k3v, k4v = acc(t + dt, u + dt * k3u);
        u += dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
        v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return u;
}

// Two-field averaged scheme for one mode with discrete eigenvalue lambda and
// unit source amplitude; each step solves the coupled 2x2 system directly.
double modal_scheme(double lambda, double T, int steps, const std::function<double(double)>& g) {
    const double tau = T / steps;
    double u = 0, q = 0;
    for (int i = 1; i <= steps; ++i) {
        const double load = 0.5 * (g(i * tau) + g((i - 1) * tau));
        // [ lambda/2   1/tau ] [u_new]   [ q/tau - lambda u/2 + load ]
        // [ 1/tau     -1/2   ] [q_new] = [ u/tau + q/2               ]
        const double a11 = lambda / 2, a12 = 1 / tau, a21 = 1 / tau, a22 = -0.5;
        const double b1 = q / tau - lambda * u / 2 + load, b2 = u / tau + q / 2;
        const double det = a11 * a22 - a12 * a21;
        const double u_new = (b1 * a22 - a12 * b2) / det;
        const double q_new = (a11 * b2 - a21 * b1) / det;
        u = u_new;
        q = q_new;
    }
    return u;
}

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

struct Fixture {
    Mesh mesh;
    FEMatrices fe;
    explicit Fixture(Mesh m) : mesh(std::move(m)), fe(assemble(mesh)) {}
};

}  // namespace

TEST(TimeGrid, Construction) {
    const TimeGrid grid = make_time_grid(1.0, 200);
    EXPECT_DOUBLE_EQ(grid.step(), 1.0 / 200);
    EXPECT_NEAR(grid.node(200), 1.0, 1e-15);
    EXPECT_NEAR(grid.step() * grid.steps, grid.final_time, 1e-15);
    EXPECT_THROW(make_time_grid(1.0, 0), InvalidArgument);
    EXPECT_THROW(make_time_grid(0.0, 10), InvalidArgument);
    EXPECT_THROW(make_time_grid(-1.0, 10), InvalidArgument);
}

TEST(TemporalProfile, CompatibilityOfPowers) {
    EXPECT_TRUE(TemporalProfile::power(4).compatible());
    EXPECT_TRUE(TemporalProfile::power(6).compatible());
    EXPECT_FALSE(TemporalProfile::power(3).compatible());
    EXPECT_FALSE(TemporalProfile::power(0).compatible());
    EXPECT_DOUBLE_EQ(*TemporalProfile::power(4).derivative(4, 0.3), 24.0);
    EXPECT_DOUBLE_EQ(*TemporalProfile::power(4).derivative(2, 0.5), 3.0);
}

TEST(TemporalProfile, NumericalCompatibilityWithoutClosedForms) {
    const TemporalProfile quartic("quartic", [](double t) { return t * t * t * t; });
    EXPECT_TRUE(quartic.compatible());
    EXPECT_NEAR(quartic.derivative_at_zero(3), 0.0, 1e-8);
    const TemporalProfile sine("sin", [](double t) { return std::sin(t); });
    EXPECT_FALSE(sine.compatible());
    EXPECT_NEAR(sine.derivative_at_zero(1), 1.0, 1e-8);
    const TemporalProfile cubic("cubic", [](double t) { return t * t * t; });
    EXPECT_FALSE(cubic.compatible());
    EXPECT_NEAR(cubic.derivative_at_zero(3), 6.0, 1e-6);
}

TEST(ForwardSolver, RejectsIncompatibleProfileAndSizes) {
    const Fixture s(build_interval_mesh(8));
    EXPECT_THROW(ForwardSolver(s.fe, make_time_grid(1, 10), TemporalProfile::power(2)), InvalidArgument);
    const ForwardSolver solver(s.fe, make_time_grid(1, 10), TemporalProfile::power(4));
    EXPECT_THROW(solver.final_state(Vector::Zero(3)), InvalidArgument);
}

TEST(ForwardSolver, ZeroSourceGivesZeroState) {
    const Fixture s(build_square_mesh(6));
    const ForwardSolver solver(s.fe, make_time_grid(1, 20), TemporalProfile::power(4));
    const ForwardState state = solver.solve(Vector::Zero(s.mesh.num_dofs()));
    EXPECT_EQ(max_abs(state.displacement), 0.0);
    EXPECT_EQ(max_abs(state.velocity), 0.0);
}

TEST(ForwardSolver, MatchesScalarRecurrenceOnDiscreteEigenvectors) {
    // On a uniform 1D mesh the interpolant of sin(k pi x) is a generalized
    // eigenvector of (K, M) with lambda_h = 6 (1 - cos th) / (h^2 (2 + cos th)).
    const int cells = 40;
    const Fixture s(build_interval_mesh(cells));
    const double h = 1.0 / cells;
    const auto g = [](double t) { return std::pow(t, 4); };
    for (int steps : {7, 50}) {
        const ForwardSolver solver(s.fe, make_time_grid(1.3, steps), TemporalProfile::power(4));
        for (int k : {1, 3, 17}) {
            const Vector mode = s.mesh.interpolate([k](const Point& p) { return std::sin(k * M_PI * p.x); });
            const double theta = k * M_PI * h;
            const double lambda = 6 * (1 - std::cos(theta)) / (h * h * (2 + std::cos(theta)));
            const double amplitude = modal_scheme(lambda, 1.3, steps, g);
            const Vector expected = amplitude * mode;
            EXPECT_LT(max_abs(solver.final_state(mode) - expected), 1e-12 * max_abs(expected) + 1e-16)
                << "k = " << k << " steps = " << steps;
        }
    }
}

TEST(ForwardSolver, ClosedFormDuhamelAgreesWithOde) {
    for (double mu : {M_PI * M_PI, 4 * M_PI * M_PI, 50.0}) {
        EXPECT_NEAR(ode_final_value(mu, 1.0, 20000), duhamel_t4(mu, 1.0), 1e-12);
    }
}

TEST(ForwardSolver, SineModeConvergesToDuhamelValue) {
    // u(x, T) = alpha sin(pi x), error O(h^2 + tau^2) with tau = h
    const double alpha = duhamel_t4(M_PI * M_PI, 1.0);
    std::vector<double> errors;
    for (int cells : {32, 64, 128, 256}) {
        const Fixture s(build_interval_mesh(cells));
        const auto sine = [](const Point& p) { return std::sin(M_PI * p.x); };
        const Vector u = step_scheme(s.fe, make_time_grid(1.0, cells), TemporalProfile::power(4),
                                     s.mesh.interpolate(sine));
        const Vector exact = alpha * s.mesh.interpolate(sine);
        errors.push_back(max_abs(u - exact) / max_abs(exact));
    }
    EXPECT_LE(errors.back(), 1e-3);
    for (std::size_t i = 1; i < errors.size(); ++i) {
        EXPECT_NEAR(std::log2(errors[i - 1] / errors[i]), 2.0, 0.1);
    }
}

TEST(ForwardSolver, QuarterPowerSourceConvergesAtSecondOrder) {
    const auto f = [](const Point& p) { return std::pow(p.x * (1 - p.x), 0.25); };
    std::vector<double> errors;
    double tail = 0;
    for (int cells : {32, 64, 128}) {
        const Fixture s(build_interval_mesh(cells));
        const Vector u = step_scheme(s.fe, make_time_grid(1.0, cells), TemporalProfile::power(4),
                                     s.mesh.interpolate(f));
        std::vector<Point> nodes;
        for (int d = 0; d < s.mesh.num_dofs(); ++d) {
            nodes.push_back(s.mesh.vertices()[s.mesh.dof_vertex()[d]]);
        }
        const OracleValues reference = oracle_forward(1, f, TemporalProfile::power(4), 1.0, 400, nodes);
        tail = reference.tail_estimate;
        double error = 0;
        for (int d = 0; d < s.mesh.num_dofs(); ++d) {
            error = std::max(error, std::abs(u[d] - reference.values[d]));
        }
        errors.push_back(error);
    }
    ASSERT_GT(errors.back(), 20 * tail);
    for (std::size_t i = 1; i < errors.size(); ++i) {
        EXPECT_NEAR(std::log2(errors[i - 1] / errors[i]), 2.0, 0.3);
    }
}

TEST(ForwardSolver, Linearity) {
    const Fixture s(build_square_mesh(7));
    const ForwardSolver solver(s.fe, make_time_grid(1, 30), TemporalProfile::power(4));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 5; ++trial) {
        Vector f1(s.mesh.num_dofs()), f2(s.mesh.num_dofs());
        for (int i = 0; i < f1.size(); ++i) {
            f1[i] = normal(rng);
            f2[i] = normal(rng);
        }
        const double c1 = normal(rng), c2 = normal(rng);
        const Vector combined = solver.final_state(c1 * f1 + c2 * f2);
        const Vector separate = c1 * solver.final_state(f1) + c2 * solver.final_state(f2);
        EXPECT_LT(max_abs(combined - separate), 1e-13 * (1 + max_abs(separate)));
    }
}

TEST(ForwardSolver, FirstStepHasNoStartUpTransient) {
    // g(0) = 0 and g = t^4: the first load is tau^2/4 * tau^4 M f
    const Fixture s(build_interval_mesh(32));
    const double tau = 1.0 / 50;
    const ForwardSolver solver(s.fe, make_time_grid(1, 50), TemporalProfile::power(4));
    const Vector f = s.mesh.interpolate([](const Point& p) { return std::sin(M_PI * p.x); });
    const ForwardState first = solver.solve(f, 1);
    const double norm_u = std::sqrt(first.displacement.dot(s.fe.mass * first.displacement));
    const double norm_f = std::sqrt(f.dot(s.fe.mass * f));
    EXPECT_LE(norm_u, tau * tau * norm_f);
}

TEST(ApplyForward, SensorsAndNodalProperty) {
    const Fixture s(build_interval_mesh(10));
    const ForwardSolver solver(s.fe, make_time_grid(1, 20), TemporalProfile::power(4));
    const Vector f = s.mesh.interpolate([](const Point& p) { return p.x * (1 - p.x); });
    SensorSet vertices;
    vertices.points = {{0.3, 0}, {0.7, 0}};
    const std::vector<double> values = apply_forward(solver, s.mesh, f, vertices);
    const Vector u = solver.final_state(f);
    EXPECT_DOUBLE_EQ(values[0], u[2]);  // vertex 3 = dof 2
    EXPECT_DOUBLE_EQ(values[1], u[6]);
    const std::vector<double> zero = apply_forward(solver, s.mesh, Vector::Zero(9), vertices);
    EXPECT_EQ(zero[0], 0.0);
    EXPECT_EQ(zero[1], 0.0);
    SensorSet outside;
    outside.points = {{0.5, 0}, {1.0, 0}};
    EXPECT_THROW(apply_forward(solver, s.mesh, f, outside), InvalidArgument);
    outside.points = {{-0.1, 0}};
    EXPECT_THROW(apply_forward(solver, s.mesh, f, outside), InvalidArgument);
}

TEST(ApplyForward, ReferenceMaximumOfQuarterPowerSource) {
    const Fixture s(build_interval_mesh(251));
    const ForwardSolver solver(s.fe, make_time_grid(1, 200), TemporalProfile::power(4));
    const Vector f = s.mesh.interpolate([](const Point& p) { return std::pow(p.x * (1 - p.x), 0.25); });
    const SensorSet fine = make_sensors(1, 1999, SensorLayout::uniform_grid);
    const std::vector<double> values = apply_forward(solver, s.mesh, f, fine);
    const double peak = *std::max_element(values.begin(), values.end());
    EXPECT_NEAR(peak, 0.0221, 0.05 * 0.0221);
}

TEST(ForwardGram, SingleDofIsSumOfSquares) {
    const Fixture s(build_interval_mesh(2));
    const ForwardSolver solver(s.fe, make_time_grid(1, 10), TemporalProfile::power(4));
    const SensorSet sensors = make_sensors(1, 7, SensorLayout::uniform_grid);
    const ForwardOperatorSample sample = assemble_forward_gram(solver, s.mesh, sensors);
    const std::vector<double> column = apply_forward(solver, s.mesh, Vector::Ones(1), sensors);
    double expected = 0;
    for (double v : column) {
        expected += v * v;
    }
    expected /= 7;
    ASSERT_EQ(sample.gram.rows(), 1);
    EXPECT_NEAR(sample.gram(0, 0), expected, 1e-15 * expected);
}

TEST(ForwardGram, ColumnsMatchDirectForwardRuns) {
    const Fixture s(build_interval_mesh(12));
    const ForwardSolver solver(s.fe, make_time_grid(1, 25), TemporalProfile::power(4));
    const SensorSet sensors = make_sensors(1, 30, SensorLayout::jittered_grid, 4);
    GramOptions options;
    options.storage = GramStorage::store_sensor_matrix;
    options.block_columns = 5;
    const ForwardOperatorSample sample = assemble_forward_gram(solver, s.mesh, sensors, options);
    ASSERT_TRUE(sample.sensor_matrix.has_value());
    for (int j = 0; j < s.mesh.num_dofs(); ++j) {
        const std::vector<double> column = apply_forward(solver, s.mesh, Vector::Unit(s.mesh.num_dofs(), j), sensors);
        for (int i = 0; i < 30; ++i) {
            EXPECT_NEAR((*sample.sensor_matrix)(i, j), column[i], 1e-15);
        }
    }
    const Matrix& g = sample.gram;
    EXPECT_LE((g - g.transpose()).norm(), 1e-12 * g.norm());
    const Matrix direct = sample.sensor_matrix->transpose() * *sample.sensor_matrix / 30.0;
    EXPECT_LE((g - direct).norm(), 1e-13 * g.norm());
}

TEST(ForwardGram, StorageModesAndThreadsAgree) {
    const Fixture s(build_square_mesh(8));
    const ForwardSolver solver(s.fe, make_time_grid(1, 20), TemporalProfile::power(4));
    const SensorSet sensors = make_sensors(2, 49, SensorLayout::jittered_grid, 9);
    GramOptions stored, accumulated;
    stored.storage = GramStorage::store_sensor_matrix;
    accumulated.storage = GramStorage::accumulate_only;
    accumulated.threads = 3;
    accumulated.block_columns = 4;
    const ForwardOperatorSample a = assemble_forward_gram(solver, s.mesh, sensors, stored);
    const ForwardOperatorSample b = assemble_forward_gram(solver, s.mesh, sensors, accumulated);
    EXPECT_FALSE(b.sensor_matrix.has_value());
    EXPECT_EQ((a.response - b.response).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE((a.gram - b.gram).norm(), 1e-13 * a.gram.norm());
    std::vector<double> m(49);
    for (int i = 0; i < 49; ++i) {
        m[i] = std::sin(i);
    }
    EXPECT_LE((a.data_term(m) - b.data_term(m)).norm(), 1e-13 * a.data_term(m).norm());
    const Vector c = Vector::LinSpaced(s.mesh.num_dofs(), -1, 1);
    EXPECT_LE((a.sensor_values(c) - b.sensor_values(c)).norm(), 1e-13 * a.sensor_values(c).norm());
}

TEST(ForwardGram, SharedResponseMatchesFullAssembly) {
    const Fixture s(build_interval_mesh(16));
    const ForwardSolver solver(s.fe, make_time_grid(1, 16), TemporalProfile::power(4));
    const Matrix response = forward_response(solver);
    for (int n : {5, 50}) {
        const SensorSet sensors = make_sensors(1, n, SensorLayout::uniform_grid);
        const ForwardOperatorSample full = assemble_forward_gram(solver, s.mesh, sensors);
        const ForwardOperatorSample shared = sample_forward(response, s.mesh, sensors);
        EXPECT_EQ((full.gram - shared.gram).cwiseAbs().maxCoeff(), 0.0);
    }
    EXPECT_THROW(sample_forward(Matrix::Zero(3, 3), s.mesh, make_sensors(1, 5, SensorLayout::uniform_grid)),
                 InvalidArgument);
}

TEST(ForwardSolver, NonFiniteProfileValuesAreRejected) {
    const Fixture s(build_interval_mesh(8));
    const TemporalProfile overflow("overflow", [](double t) { return std::pow(t, 4) * std::exp(std::pow(t, 3)); });
    ASSERT_TRUE(overflow.compatible());
    EXPECT_THROW(ForwardSolver(s.fe, make_time_grid(10.0, 8), overflow), NumericalError);
    EXPECT_NO_THROW(ForwardSolver(s.fe, make_time_grid(1.0, 8), overflow));
}
