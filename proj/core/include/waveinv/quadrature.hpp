#pragma once

#include <functional>
#include <span>
#include <vector>

namespace waveinv::quadrature {

struct Node {
    double x;
    double weight;
};

/// 20-point Gauss-Legendre rule on [-1, 1].
std::span<const Node> gauss_legendre_20();

/// Composite rule on [a, b]: `panels` uniform panels, with the first and last
/// panel further split geometrically toward the endpoints (`grading_levels`
/// levels, ratio `grading_ratio`). Used for integrands with algebraic endpoint
/// singularities such as x^(1/4).
struct CompositeOptions {
    int panels = 64;
    int grading_levels = 30;
    double grading_ratio = 0.15;
};

std::vector<Node> composite_rule(double a, double b, const CompositeOptions& options);

/// Gauss panels on [a, b] split geometrically toward `a` (or toward `b` when
/// `toward_start` is false).
std::vector<Node> graded_rule(double a, double b, bool toward_start, int levels, double ratio = 0.15);

double integrate(const std::function<double(double)>& f, std::span<const Node> rule);

/// Adaptive Gauss-Kronrod over [a, b], pre-split into `panels` pieces so that
/// oscillatory integrands are resolved. Returns the estimate; `error_estimate`
/// receives the summed Kronrod error if non-null.
double adaptive(const std::function<double(double)>& f, double a, double b, int panels,
                double relative_tolerance = 1e-10, double* error_estimate = nullptr);

}  // namespace waveinv::quadrature
