#include <cmath>

#include <gtest/gtest.h>

#include "waveinv/errors.hpp"
#include "waveinv/measure.hpp"
#include "waveinv/quadrature.hpp"
#include "waveinv/spectral_oracle.hpp"

using namespace waveinv;

namespace {

const TemporalProfile kQuartic = TemporalProfile::power(4);

double closed_t4(double mu, double T) {
    return std::pow(T, 4) / mu - 12 * T * T / (mu * mu) + 24 * (1 - std::cos(std::sqrt(mu) * T)) / std::pow(mu, 3);
}

double quarter_source(const Point& p) { return std::pow(p.x * (1 - p.x), 0.25); }

}  // namespace

TEST(SineBasis, ModesSortedAndComplete) {
    const SineBasis line(1, 5);
    ASSERT_EQ(line.modes().size(), 5u);
    for (int k = 1; k <= 5; ++k) {
        EXPECT_NEAR(line.modes()[k - 1].eigenvalue, k * k * M_PI * M_PI, 1e-12);
    }
    const SineBasis square(2, 6);
    ASSERT_EQ(square.modes().size(), 36u);
    EXPECT_NEAR(square.modes()[0].eigenvalue, 2 * M_PI * M_PI, 1e-12);
    for (std::size_t i = 1; i < square.modes().size(); ++i) {
        EXPECT_LE(square.modes()[i - 1].eigenvalue, square.modes()[i].eigenvalue);
    }
    EXPECT_THROW(SineBasis(3, 4), InvalidArgument);
    EXPECT_THROW(SineBasis(1, 0), InvalidArgument);
}

TEST(SineBasis, EigenfunctionsAreOrthonormal) {
    const SineBasis basis(1, 8);
    quadrature::CompositeOptions options;
    options.panels = 32;
    options.grading_levels = 0;
    const auto rule = quadrature::composite_rule(0, 1, options);
    for (const auto& a : basis.modes()) {
        for (const auto& b : basis.modes()) {
            const double inner = quadrature::integrate(
                [&](double x) { return basis.eigenfunction(a, {x, 0}) * basis.eigenfunction(b, {x, 0}); }, rule);
            EXPECT_NEAR(inner, a.k == b.k ? 1.0 : 0.0, 1e-13);
        }
    }
}

TEST(Duhamel, RejectsNonPositiveEigenvalue) {
    EXPECT_THROW(duhamel_coeff(0.0, kQuartic, 1.0), InvalidArgument);
    EXPECT_THROW(duhamel_coeff(-1.0, kQuartic, 1.0), InvalidArgument);
    EXPECT_THROW(duhamel_coeff(1.0, kQuartic, 0.0), InvalidArgument);
    EXPECT_THROW(duhamel_coeff(1.0, TemporalProfile::power(6), 1.0, DuhamelMethod::closed_form), InvalidArgument);
}

TEST(Duhamel, ZeroProfileGivesZero) {
    const TemporalProfile zero("zero", [](double) { return 0.0; });
    for (double mu : {1.0, 100.0, 1e6}) {
        EXPECT_EQ(duhamel_coeff(mu, zero, 1.0), 0.0);
    }
}

TEST(Duhamel, QuadratureMatchesClosedForm) {
    for (int k : {1, 2, 7, 40, 300, 1000}) {
        const double mu = k * k * M_PI * M_PI;
        const double expected = closed_t4(mu, 1.0);
        EXPECT_NEAR(duhamel_coeff(mu, kQuartic, 1.0), expected, 1e-10 * std::abs(expected)) << "k = " << k;
        EXPECT_NEAR(duhamel_coeff_t4(mu, 1.0), expected, 1e-14 * std::abs(expected));
    }
    // other final times and a 2D eigenvalue
    EXPECT_NEAR(duhamel_coeff(5 * M_PI * M_PI, kQuartic, 1.7), closed_t4(5 * M_PI * M_PI, 1.7),
                1e-10 * closed_t4(5 * M_PI * M_PI, 1.7));
}

TEST(Duhamel, HighModesBehaveLikeInverseEigenvalue) {
    // mu alpha = 1 - 12/mu + 24 (1 - cos)/mu^2 for g = t^4, T = 1
    const double mu = std::pow(1000 * M_PI, 2);
    const double alpha = duhamel_coeff(mu, kQuartic, 1.0);
    EXPECT_LE(std::abs(mu * alpha - 1.0), 12.0 / mu + 48.0 / (mu * mu));
    for (int k = 1; k <= 1000; ++k) {
        EXPECT_GT(duhamel_coeff_t4(k * k * M_PI * M_PI, 1.0), 0.0) << "k = " << k;
    }
}

TEST(SpectralOracle, SingleModeIsReproducedExactly) {
    const int k = 3;
    const auto mode = [](const Point& p) { return std::sqrt(2.0) * std::sin(3 * M_PI * p.x); };
    SpectralOracle::Options options;
    options.k_max = 20;
    const SpectralOracle oracle(1, mode, kQuartic, 1.0, options);
    EXPECT_NEAR(oracle.source_norm(), 1.0, 1e-12);
    const std::vector<Point> points{{0.1, 0}, {0.37, 0}, {0.5, 0}, {0.93, 0}};
    const std::vector<double> values = oracle.evaluate(points);
    const double alpha = closed_t4(k * k * M_PI * M_PI, 1.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        EXPECT_NEAR(values[i], alpha * mode(points[i]), 1e-13);
    }
}

TEST(SpectralOracle, SingleModeInTwoDimensions) {
    const auto mode = [](const Point& p) { return 2 * std::sin(2 * M_PI * p.x) * std::sin(M_PI * p.y); };
    SpectralOracle::Options options;
    options.k_max = 6;
    options.quadrature.grading_levels = 0;
    options.quadrature.panels = 12;
    const SpectralOracle oracle(2, mode, kQuartic, 1.0, options);
    const std::vector<Point> points{{0.2, 0.3}, {0.61, 0.77}};
    const std::vector<double> values = oracle.evaluate(points);
    const double alpha = closed_t4(5 * M_PI * M_PI, 1.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        EXPECT_NEAR(values[i], alpha * mode(points[i]), 1e-12);
    }
}

TEST(SpectralOracle, QuarterPowerSourceReference) {
    // ||f*||^2 = B(3/2, 3/2) = Gamma(3/2)^2 / Gamma(3)
    const double norm = std::tgamma(1.5) / std::sqrt(std::tgamma(3.0));
    SpectralOracle::Options options;
    const SpectralOracle oracle(1, quarter_source, kQuartic, 1.0, options);
    EXPECT_NEAR(oracle.source_norm(), norm, 1e-10);
    EXPECT_LT(oracle.tail_estimate(), 1e-5);
    const SensorSet fine = make_sensors(1, 999, SensorLayout::uniform_grid);
    const std::vector<double> values = oracle.evaluate(fine.points);
    const double peak = *std::max_element(values.begin(), values.end());
    EXPECT_NEAR(peak, 0.0221, 0.05 * 0.0221);
    // symmetric source, symmetric field
    EXPECT_NEAR(values[0], values[998], 1e-12);
}

TEST(SpectralOracle, IsLinearInTheSource) {
    const auto f = [](const Point& p) { return p.x * (1 - p.x); };
    const auto g = [](const Point& p) { return std::sin(M_PI * p.x) * p.x; };
    SpectralOracle::Options options;
    options.k_max = 60;
    const std::vector<Point> points{{0.15, 0}, {0.5, 0}, {0.8, 0}};
    const auto uf = SpectralOracle(1, f, kQuartic, 1.0, options).evaluate(points);
    const auto ug = SpectralOracle(1, g, kQuartic, 1.0, options).evaluate(points);
    const auto combined = SpectralOracle(1, [&](const Point& p) { return 2 * f(p) - 0.5 * g(p); }, kQuartic, 1.0,
                                         options)
                              .evaluate(points);
    for (std::size_t i = 0; i < points.size(); ++i) {
        EXPECT_NEAR(combined[i], 2 * uf[i] - 0.5 * ug[i], 1e-14);
    }
}

TEST(EigenScaling, OneDimensionalBand) {
    const EigenScalingReport report = eigenvalue_scaling_check(400, kQuartic, 1.0, 1);
    EXPECT_TRUE(report.within_band);
    ASSERT_EQ(report.rows.size(), 400u);
    for (const auto& row : report.rows) {
        EXPECT_GT(row.alpha, 0.0);
    }
    // eta_k ~ pi^4 k^4: doubling k multiplies eta by 16
    for (int k : {40, 100, 200}) {
        EXPECT_NEAR(report.rows[2 * k - 1].eta / report.rows[k - 1].eta, 16.0, 1.6) << "k = " << k;
    }
    EXPECT_NEAR(report.rows[399].ratio, std::pow(M_PI, 4), 1e-3 * std::pow(M_PI, 4));
}

TEST(EigenScaling, TwoDimensionalBand) {
    const EigenScalingReport report = eigenvalue_scaling_check(400, kQuartic, 1.0, 2);
    EXPECT_TRUE(report.within_band);
    // eta_k ~ (4 pi k)^2 by Weyl's law: doubling k multiplies eta by about 4
    EXPECT_NEAR(report.rows[399].eta / report.rows[199].eta, 4.0, 0.4);
}

TEST(EigenScaling, NonPositiveCoefficientIsAContractViolation) {
    // g(1) > 0 but g''(1) is large, so the lowest modes respond with the wrong sign
    const TemporalProfile profile("t6-t4", [](double t) { return std::pow(t, 6) - 0.99 * std::pow(t, 4); });
    ASSERT_TRUE(profile.compatible());
    EXPECT_LT(duhamel_coeff(M_PI * M_PI, profile, 1.0), 0.0);
    EXPECT_THROW(eigenvalue_scaling_check(40, profile, 1.0, 1), ContractViolation);
    const TemporalProfile negative("-t4", [](double t) { return -std::pow(t, 4); });
    EXPECT_THROW(eigenvalue_scaling_check(40, negative, 1.0, 1), InvalidArgument);
    EXPECT_THROW(eigenvalue_scaling_check(5, kQuartic, 1.0, 1), InvalidArgument);
}

TEST(Duhamel, NonFiniteProfileIsANumericalError) {
    const TemporalProfile overflow("overflow", [](double t) { return std::pow(t, 4) * std::exp(std::pow(t, 3)); });
    EXPECT_THROW(duhamel_coeff(M_PI * M_PI, overflow, 10.0), NumericalError);
}
