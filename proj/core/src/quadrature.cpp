#include "waveinv/quadrature.hpp"

#include <array>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "waveinv/errors.hpp"

namespace waveinv::quadrature {

namespace {

std::array<Node, 20> make_gauss_legendre_20() {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const auto& abscissa = Rule::abscissa();
    const auto& weights = Rule::weights();
    std::array<Node, 20> nodes{};
    // boost stores the non-negative half of the symmetric rule
    std::size_t next = 0;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        nodes[next++] = {abscissa[i], weights[i]};
        nodes[next++] = {-abscissa[i], weights[i]};
    }
    return nodes;
}

void append_panel(std::vector<Node>& rule, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (const Node& node : gauss_legendre_20()) {
        rule.push_back({mid + half * node.x, half * node.weight});
    }
}

}  // namespace

std::span<const Node> gauss_legendre_20() {
    static const std::array<Node, 20> nodes = make_gauss_legendre_20();
    return nodes;
}

std::vector<Node> graded_rule(double a, double b, bool toward_start, int levels, double ratio) {
    if (!(b > a) || levels < 0 || !(ratio > 0.0) || !(ratio < 1.0)) {
        throw InvalidArgument("graded_rule: invalid interval or grading");
    }
    std::vector<Node> rule;
    rule.reserve(static_cast<std::size_t>(levels + 1) * 20);
    const double length = b - a;
    double outer = 1.0;
    for (int level = 0; level < levels; ++level) {
        const double inner = outer * ratio;
        if (toward_start) {
            append_panel(rule, a + length * inner, a + length * outer);
        } else {
            append_panel(rule, b - length * outer, b - length * inner);
        }
        outer = inner;
    }
    if (toward_start) {
        append_panel(rule, a, a + length * outer);
    } else {
        append_panel(rule, b - length * outer, b);
    }
    return rule;
}

std::vector<Node> composite_rule(double a, double b, const CompositeOptions& options) {
    if (!(b > a) || options.panels < 1) {
        throw InvalidArgument("composite_rule: invalid interval or panel count");
    }
    const double width = (b - a) / options.panels;
    std::vector<Node> rule;
    rule.reserve(static_cast<std::size_t>(options.panels + 2 * options.grading_levels) * 20);
    if (options.grading_levels == 0 || options.panels < 2) {
        for (int p = 0; p < options.panels; ++p) {
            append_panel(rule, a + p * width, a + (p + 1) * width);
        }
        return rule;
    }
    const auto left = graded_rule(a, a + width, true, options.grading_levels, options.grading_ratio);
    rule.insert(rule.end(), left.begin(), left.end());
    for (int p = 1; p + 1 < options.panels; ++p) {
        append_panel(rule, a + p * width, a + (p + 1) * width);
    }
    const auto right = graded_rule(b - width, b, false, options.grading_levels, options.grading_ratio);
    rule.insert(rule.end(), right.begin(), right.end());
    return rule;
}

double integrate(const std::function<double(double)>& f, std::span<const Node> rule) {
    double sum = 0.0;
    for (const Node& node : rule) {
        sum += node.weight * f(node.x);
    }
    return sum;
}

double adaptive(const std::function<double(double)>& f, double a, double b, int panels, double relative_tolerance,
                double* error_estimate) {
    if (panels < 1) {
        throw InvalidArgument("adaptive: panels must be positive");
    }
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    // NaN or inf would otherwise drive every panel to the maximum depth
    const auto checked = [&f](double x) {
        const double value = f(x);
        if (!std::isfinite(value)) {
            throw NumericalError("adaptive quadrature: integrand is not finite at " + std::to_string(x));
        }
        return value;
    };
    const double width = (b - a) / panels;
    double total = 0.0;
    double total_error = 0.0;
    for (int p = 0; p < panels; ++p) {
        double error = 0.0;
        total += Rule::integrate(checked, a + p * width, a + (p + 1) * width, 12, relative_tolerance, &error);
        total_error += error;
    }
    if (error_estimate != nullptr) {
        *error_estimate = total_error;
    }
    return total;
}

}  // namespace waveinv::quadrature
