#include "waveinv/spectral_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "waveinv/errors.hpp"

namespace waveinv {

namespace {

constexpr double kPi = M_PI;

quadrature::CompositeOptions resolved(quadrature::CompositeOptions options, int k_max) {
    // one panel per half oscillation of the highest mode
    options.panels = std::max(options.panels, k_max);
    return options;
}

}  // namespace

SineBasis::SineBasis(int dimension, int k_max) : dimension_(dimension), k_max_(k_max) {
    if (dimension != 1 && dimension != 2) {
        throw InvalidArgument("SineBasis: dimension must be 1 or 2");
    }
    if (k_max < 1) {
        throw InvalidArgument("SineBasis: k_max must be >= 1");
    }
    if (dimension == 1) {
        modes_.reserve(k_max);
        for (int k = 1; k <= k_max; ++k) {
            modes_.push_back({k, 0, kPi * kPi * k * k});
        }
        return;
    }
    modes_.reserve(static_cast<std::size_t>(k_max) * k_max);
    for (int k = 1; k <= k_max; ++k) {
        for (int l = 1; l <= k_max; ++l) {
            modes_.push_back({k, l, kPi * kPi * (k * k + l * l)});
        }
    }
    std::stable_sort(modes_.begin(), modes_.end(), [](const Mode& a, const Mode& b) {
        if (a.eigenvalue != b.eigenvalue) {
            return a.eigenvalue < b.eigenvalue;
        }
        return a.k < b.k;
    });
}

double SineBasis::eigenfunction(const Mode& mode, const Point& p) const {
    const double x_part = std::sqrt(2.0) * std::sin(mode.k * kPi * p.x);
    if (dimension_ == 1) {
        return x_part;
    }
    return x_part * std::sqrt(2.0) * std::sin(mode.l * kPi * p.y);
}

double duhamel_coeff_t4(double mu, double final_time) {
    if (!(mu > 0.0)) {
        throw InvalidArgument("duhamel_coeff_t4: eigenvalue must be positive");
    }
    const double t2 = final_time * final_time;
    return t2 * t2 / mu - 12.0 * t2 / (mu * mu) + 24.0 * (1.0 - std::cos(std::sqrt(mu) * final_time)) / (mu * mu * mu);
}

double duhamel_coeff(double mu, const TemporalProfile& profile, double final_time, DuhamelMethod method) {
    if (!(mu > 0.0)) {
        throw InvalidArgument("duhamel_coeff: eigenvalue must be positive, got " + std::to_string(mu));
    }
    if (!(final_time > 0.0)) {
        throw InvalidArgument("duhamel_coeff: final time must be positive");
    }
    if (method == DuhamelMethod::closed_form) {
        if (profile.power_exponent() != 4) {
            throw InvalidArgument("duhamel_coeff: closed form is only available for g(t) = t^4");
        }
        return duhamel_coeff_t4(mu, final_time);
    }
    const double omega = std::sqrt(mu);
    const int panels = std::max(4, static_cast<int>(std::ceil(omega * final_time / kPi)));
    const auto integrand = [&](double s) { return std::sin(omega * (final_time - s)) * profile.value(s); };
    return quadrature::adaptive(integrand, 0.0, final_time, panels) / omega;
}

SpectralOracle::SpectralOracle(int dimension, const SpatialFunction& source, const TemporalProfile& profile,
                               double final_time, Options options)
    : basis_(dimension, options.k_max) {
    if (!source) {
        throw InvalidArgument("SpectralOracle: source must be callable");
    }
    const int k_max = options.k_max;
    const std::vector<quadrature::Node> rule = quadrature::composite_rule(0.0, 1.0, resolved(options.quadrature, k_max));
    const auto q = static_cast<Eigen::Index>(rule.size());

    // sines(a, k-1) = sqrt(2) sin(k pi x_a)
    Matrix sines(q, k_max);
    Vector weights(q);
    for (Eigen::Index a = 0; a < q; ++a) {
        weights[a] = rule[a].weight;
        for (int k = 1; k <= k_max; ++k) {
            sines(a, k - 1) = std::sqrt(2.0) * std::sin(k * kPi * rule[a].x);
        }
    }

    double energy = 0.0;
    Matrix coefficient_grid;  // (k-1, l-1) in 2D
    if (dimension == 1) {
        Vector weighted(q);
        for (Eigen::Index a = 0; a < q; ++a) {
            const double value = source({rule[a].x, 0.0});
            weighted[a] = weights[a] * value;
            energy += weights[a] * value * value;
        }
        const Vector coefficients = sines.transpose() * weighted;
        source_coefficients_.assign(coefficients.data(), coefficients.data() + coefficients.size());
    } else {
        Matrix weighted(q, q);
        for (Eigen::Index b = 0; b < q; ++b) {
            for (Eigen::Index a = 0; a < q; ++a) {
                const double value = source({rule[a].x, rule[b].x});
                const double w = weights[a] * weights[b];
                weighted(a, b) = w * value;
                energy += w * value * value;
            }
        }
        coefficient_grid = sines.transpose() * weighted * sines;
        source_coefficients_.reserve(basis_.modes().size());
        for (const auto& mode : basis_.modes()) {
            source_coefficients_.push_back(coefficient_grid(mode.k - 1, mode.l - 1));
        }
    }
    source_norm_ = std::sqrt(energy);

    const DuhamelMethod method =
        profile.power_exponent() == 4 ? DuhamelMethod::closed_form : DuhamelMethod::quadrature;
    std::map<double, double> cache;
    duhamel_.reserve(basis_.modes().size());
    double resolved_energy = 0.0;
    double decay_constant = 0.0;
    for (std::size_t i = 0; i < basis_.modes().size(); ++i) {
        const double mu = basis_.modes()[i].eigenvalue;
        auto it = cache.find(mu);
        if (it == cache.end()) {
            it = cache.emplace(mu, duhamel_coeff(mu, profile, final_time, method)).first;
        }
        duhamel_.push_back(it->second);
        resolved_energy += source_coefficients_[i] * source_coefficients_[i];
        decay_constant = std::max(decay_constant, std::abs(mu * it->second));
    }

    const double unresolved = std::sqrt(std::max(0.0, energy - resolved_energy));
    if (dimension == 1) {
        // sum_{k > K} (c / (k pi)^2)^2 <= c^2 / (3 pi^4 K^3)
        const double tail_alpha = decay_constant / (kPi * kPi) / std::sqrt(3.0 * std::pow(k_max, 3));
        tail_estimate_ = std::sqrt(2.0) * unresolved * tail_alpha;
    } else {
        // modes outside the K x K square: sum (c/mu)^2 <~ c^2 / pi^4 * pi / (4 K^2)
        const double tail_alpha = decay_constant / (kPi * kPi) * std::sqrt(kPi / 4.0) / k_max;
        tail_estimate_ = 2.0 * unresolved * tail_alpha;
    }
}

std::vector<double> SpectralOracle::evaluate(std::span<const Point> points) const {
    const int k_max = basis_.k_max();
    std::vector<double> values;
    values.reserve(points.size());
    if (basis_.dimension() == 1) {
        for (const Point& p : points) {
            double sum = 0.0;
            for (int k = 1; k <= k_max; ++k) {
                sum += source_coefficients_[k - 1] * duhamel_[k - 1] * std::sin(k * kPi * p.x);
            }
            values.push_back(std::sqrt(2.0) * sum);
        }
        return values;
    }
    Matrix amplitudes = Matrix::Zero(k_max, k_max);
    for (std::size_t i = 0; i < basis_.modes().size(); ++i) {
        const auto& mode = basis_.modes()[i];
        amplitudes(mode.k - 1, mode.l - 1) = source_coefficients_[i] * duhamel_[i];
    }
    Vector sx(k_max);
    Vector sy(k_max);
    for (const Point& p : points) {
        for (int k = 1; k <= k_max; ++k) {
            sx[k - 1] = std::sin(k * kPi * p.x);
            sy[k - 1] = std::sin(k * kPi * p.y);
        }
        values.push_back(2.0 * sx.dot(amplitudes * sy));
    }
    return values;
}

OracleValues oracle_forward(int dimension, const SpatialFunction& source, const TemporalProfile& profile,
                            double final_time, int k_max, std::span<const Point> points) {
    SpectralOracle::Options options;
    options.k_max = k_max;
    const SpectralOracle oracle(dimension, source, profile, final_time, options);
    return {oracle.evaluate(points), oracle.tail_estimate()};
}

EigenScalingReport eigenvalue_scaling_check(int k_max, const TemporalProfile& profile, double final_time,
                                            int dimension) {
    if (k_max < 10) {
        throw InvalidArgument("eigenvalue_scaling_check: k_max must be >= 10");
    }
    const double g_final = profile.value(final_time);
    if (!(g_final > 0.0)) {
        throw InvalidArgument("eigenvalue_scaling_check: g(T) must be positive");
    }
    // enough tensor modes that the first k_max sorted eigenvalues are exact
    const int side = dimension == 1 ? k_max : static_cast<int>(std::ceil(std::sqrt(4.0 * k_max / kPi))) + 2;
    const SineBasis basis(dimension, side);
    const double weyl = dimension == 1 ? kPi * kPi : 4.0 * kPi;
    const double limit = (weyl / g_final) * (weyl / g_final);

    EigenScalingReport report;
    report.band_low = 0.25 * limit;
    report.band_high = 4.0 * limit;
    report.observed_low = std::numeric_limits<double>::infinity();
    report.observed_high = 0.0;
    const int first_checked = std::max(1, static_cast<int>(std::ceil(k_max / 10.0)));
    for (int k = 1; k <= k_max; ++k) {
        const double mu = basis.modes()[k - 1].eigenvalue;
        const double alpha = duhamel_coeff(mu, profile, final_time,
                                           profile.power_exponent() == 4 ? DuhamelMethod::closed_form
                                                                         : DuhamelMethod::quadrature);
        if (!(alpha > 0.0)) {
            throw ContractViolation("eigenvalue_scaling_check: alpha_" + std::to_string(k) +
                                    " = " + std::to_string(alpha) + " is not positive");
        }
        EigenScalingRow row;
        row.k = k;
        row.alpha = alpha;
        row.eta = 1.0 / (alpha * alpha);
        row.reference = std::pow(static_cast<double>(k), 4.0 / dimension);
        row.ratio = row.eta / row.reference;
        if (k >= first_checked) {
            report.observed_low = std::min(report.observed_low, row.ratio);
            report.observed_high = std::max(report.observed_high, row.ratio);
        }
        report.rows.push_back(row);
    }
    report.within_band = report.observed_low >= report.band_low && report.observed_high <= report.band_high;
    return report;
}

}  // namespace waveinv
