#include "waveinv/alpha_select.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "waveinv/errors.hpp"

namespace waveinv {

namespace {

double rule_exponent(int dimension) { return 1.0 / (0.5 + dimension / 8.0); }

void check_dimension(int dimension) {
    if (dimension != 1 && dimension != 2) {
        throw InvalidArgument("dimension must be 1 or 2");
    }
}

}  // namespace

double rule_alpha(double sigma, int n, int dimension, double source_norm) {
    check_dimension(dimension);
    if (!(sigma > 0.0) || n < 1 || !(source_norm > 0.0)) {
        throw InvalidArgument("rule_alpha: sigma, n and ||f|| must be positive");
    }
    return std::pow(sigma / (std::sqrt(static_cast<double>(n)) * source_norm), rule_exponent(dimension));
}

double initial_alpha(int n, int dimension) {
    check_dimension(dimension);
    if (n < 1) {
        throw InvalidArgument("initial_alpha: n must be positive");
    }
    return std::pow(static_cast<double>(n), -4.0 / (dimension + 4.0));
}

double update_alpha(double residual, double source_norm, int n, int dimension) {
    check_dimension(dimension);
    if (!(residual >= 0.0) || !(source_norm > 0.0) || n < 1) {
        throw InvalidArgument("update_alpha: needs residual >= 0, ||f_h|| > 0, n >= 1");
    }
    return std::pow(residual / (std::sqrt(static_cast<double>(n)) * source_norm), rule_exponent(dimension));
}

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::converged:
            return "converged";
        case StopReason::max_iterations:
            return "max_iterations";
        case StopReason::out_of_range:
            return "out_of_range";
    }
    return "unknown";
}

Selection self_consistent(const TikhonovProblem& problem, int dimension, const SelectionOptions& options,
                          const SelectionObserver& observer) {
    check_dimension(dimension);
    if (options.max_iterations < 1 || !(options.tolerance > 0.0)) {
        throw InvalidArgument("self_consistent: invalid iteration options");
    }
    const int n = problem.num_sensors();
    Selection selection;
    double alpha = initial_alpha(n, dimension);

    for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
        ReconstructionResult result = problem.solve(alpha, options.solver);
        if (!(result.source_norm > options.degenerate_norm)) {
            std::ostringstream message;
            message << "self_consistent: ||f_h|| = " << result.source_norm << " at alpha = " << alpha
                    << "; the data carry no recoverable signal";
            throw DegenerateDataError(message.str());
        }
        SelectionStep step;
        step.iteration = iteration;
        step.alpha = alpha;
        step.residual = result.residual;
        step.source_norm = result.source_norm;
        step.next_alpha = update_alpha(result.residual, result.source_norm, n, dimension);
        selection.trace.steps.push_back(step);
        if (observer) {
            observer(step, result);
        }
        selection.reconstruction = std::move(result);
        selection.trace.final_alpha = alpha;

        if (std::abs(alpha - step.next_alpha) <= options.tolerance * step.next_alpha) {
            selection.trace.stop = StopReason::converged;
            return selection;
        }
        if (!(step.next_alpha >= options.alpha_min && step.next_alpha <= options.alpha_max)) {
            std::ostringstream message;
            message << "update produced alpha = " << step.next_alpha << " outside [" << options.alpha_min << ", "
                    << options.alpha_max << "]";
            selection.trace.stop = StopReason::out_of_range;
            selection.trace.diagnostic = message.str();
            return selection;
        }
        alpha = step.next_alpha;
    }
    selection.trace.stop = StopReason::max_iterations;
    selection.trace.diagnostic = "no convergence within " + std::to_string(options.max_iterations) + " iterations";
    return selection;
}

void write_csv(std::ostream& out, const SelectionTrace& trace) {
    out << std::setprecision(17);
    out << "# stop=" << to_string(trace.stop) << '\n';
    out << "# final_alpha=" << trace.final_alpha << '\n';
    out << "iter,alpha,residual_n,f_norm\n";
    for (const SelectionStep& step : trace.steps) {
        out << step.iteration << ',' << step.alpha << ',' << step.residual << ',' << step.source_norm << '\n';
    }
}

}  // namespace waveinv
