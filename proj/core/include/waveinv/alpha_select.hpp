#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "waveinv/tikhonov.hpp"

namespace waveinv {

/// alpha = (sigma n^{-1/2} / ||f||)^{1 / (1/2 + d/8)}
double rule_alpha(double sigma, int n, int dimension, double source_norm);

/// n^{-4/(d+4)}
double initial_alpha(int n, int dimension);

/// One application of the fixed-point map: the rule with sigma replaced by
/// the residual and ||f*|| by ||f_h||.
double update_alpha(double residual, double source_norm, int n, int dimension);

enum class StopReason { converged, max_iterations, out_of_range };

std::string to_string(StopReason reason);

struct SelectionStep {
    int iteration = 0;
    double alpha = 0.0;
    double residual = 0.0;
    double source_norm = 0.0;
    /// Value of the update map at alpha.
    double next_alpha = 0.0;
};

struct SelectionTrace {
    std::vector<SelectionStep> steps;
    StopReason stop = StopReason::max_iterations;
    double final_alpha = 0.0;
    std::string diagnostic;
};

struct SelectionOptions {
    int max_iterations = 50;
    double tolerance = 1e-3;
    double alpha_min = 1e-16;
    double alpha_max = 1.0;
    /// ||f_h|| below this aborts with DegenerateDataError.
    double degenerate_norm = 1e-14;
    TikhonovOptions solver{};
};

struct Selection {
    ReconstructionResult reconstruction;
    SelectionTrace trace;
};

/// Observer invoked after every Tikhonov solve of the iteration.
using SelectionObserver = std::function<void(const SelectionStep&, const ReconstructionResult&)>;

/// Self-consistent parameter iteration: start from n^{-4/(d+4)}, solve, apply
/// update_alpha, stop once consecutive iterates agree to `tolerance`
/// (relative to the new iterate). The returned reconstruction is the one
/// computed at the final alpha, so re-applying the map to it moves alpha by at
/// most `tolerance`.
///
/// An iterate outside [alpha_min, alpha_max] stops the iteration with
/// StopReason::out_of_range and the last in-range reconstruction.
Selection self_consistent(const TikhonovProblem& problem, int dimension, const SelectionOptions& options = {},
                          const SelectionObserver& observer = {});

/// iter,alpha,residual_n,f_norm
void write_csv(std::ostream& out, const SelectionTrace& trace);

}  // namespace waveinv
