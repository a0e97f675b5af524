#pragma once

#include <span>
#include <vector>

#include "waveinv/forward.hpp"
#include "waveinv/mesh.hpp"
#include "waveinv/quadrature.hpp"

namespace waveinv {

/// Dirichlet eigenpairs of -Laplace on (0,1)^d: mu = (k^2 [+ l^2]) pi^2 with
/// orthonormal eigenfunctions sqrt(2) sin(k pi x) [* sqrt(2) sin(l pi y)].
/// 2D modes are stored sorted by eigenvalue (ties by (k, l)).
class SineBasis {
public:
    struct Mode {
        int k = 1;
        int l = 0;  // 0 in 1D
        double eigenvalue = 0.0;
    };

    /// 1D: k = 1..k_max. 2D: all k, l in 1..k_max.
    SineBasis(int dimension, int k_max);

    int dimension() const { return dimension_; }
    int k_max() const { return k_max_; }
    std::span<const Mode> modes() const { return modes_; }
    double eigenfunction(const Mode& mode, const Point& p) const;

private:
    int dimension_;
    int k_max_;
    std::vector<Mode> modes_;
};

enum class DuhamelMethod { quadrature, closed_form };

/// alpha = mu^{-1/2} \int_0^T sin(sqrt(mu)(T - s)) g(s) ds, the final-time
/// response of an eigenmode with eigenvalue mu. The closed form is available
/// for g = t^4 only. Throws InvalidArgument for mu <= 0 or T <= 0.
double duhamel_coeff(double mu, const TemporalProfile& profile, double final_time,
                     DuhamelMethod method = DuhamelMethod::quadrature);

/// T^4/mu - 12 T^2/mu^2 + 24 (1 - cos(sqrt(mu) T))/mu^3.
double duhamel_coeff_t4(double mu, double final_time);

/// Truncated sine-series evaluation of the continuous forward map
/// f -> u(., T) = sum_k f_k alpha_k phi_k.
class SpectralOracle {
public:
    struct Options {
        int k_max = 400;
        quadrature::CompositeOptions quadrature{};
    };

    /// Fourier coefficients are computed once, by composite Gauss quadrature
    /// graded toward the boundary.
    SpectralOracle(int dimension, const SpatialFunction& source, const TemporalProfile& profile,
                   double final_time, Options options);

    const SineBasis& basis() const { return basis_; }
    std::span<const double> source_coefficients() const { return source_coefficients_; }
    std::span<const double> duhamel_coefficients() const { return duhamel_; }

    /// u(x, T) at each point.
    std::vector<double> evaluate(std::span<const Point> points) const;

    /// Bound on the series truncation error in the maximum norm, from
    /// Parseval (unresolved source energy) and alpha_k <= c / mu_k.
    double tail_estimate() const { return tail_estimate_; }

    /// L2 norm of the source measured by the quadrature rule.
    double source_norm() const { return source_norm_; }

private:
    SineBasis basis_;
    std::vector<double> source_coefficients_;
    std::vector<double> duhamel_;
    double source_norm_ = 0.0;
    double tail_estimate_ = 0.0;
};

struct OracleValues {
    std::vector<double> values;
    double tail_estimate = 0.0;
};

OracleValues oracle_forward(int dimension, const SpatialFunction& source, const TemporalProfile& profile,
                            double final_time, int k_max, std::span<const Point> points);

struct EigenScalingRow {
    int k = 0;
    double alpha = 0.0;
    double eta = 0.0;      // alpha^{-2}
    double reference = 0.0;  // k^{4/d}
    double ratio = 0.0;    // eta / reference
};

struct EigenScalingReport {
    std::vector<EigenScalingRow> rows;
    double band_low = 0.0;
    double band_high = 0.0;
    /// min / max of the ratio over k in [k_max/10, k_max].
    double observed_low = 0.0;
    double observed_high = 0.0;
    bool within_band = false;
};

/// eta_k = alpha_k^{-2} against k^{4/d}, k indexing eigenvalues in increasing
/// order. Since mu_k alpha_k -> g(T) and mu_k ~ c_W k^{2/d} (c_W = pi^2 in 1D,
/// 4 pi in 2D), the ratio tends to (c_W / g(T))^2; the band is a factor of 4
/// either side of that limit. Throws ContractViolation if some alpha_k <= 0.
EigenScalingReport eigenvalue_scaling_check(int k_max, const TemporalProfile& profile, double final_time,
                                            int dimension);

}  // namespace waveinv
