#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waveinv/alpha_select.hpp"
#include "waveinv/forward.hpp"
#include "waveinv/measure.hpp"
#include "waveinv/metrics.hpp"

namespace waveinv::experiments {

/// L2 norm of the 2D stand-in source.
inline constexpr double kStandinNorm = 0.4614;
/// Desk-scale limits enforced unless allow_large is set.
inline constexpr int kMaxSensors = 90000;
inline constexpr int kMaxDofs = 1000;

enum class AlphaPolicy { fixed, sweep, rule, self_consistent };

std::string to_string(AlphaPolicy policy);

struct ExperimentConfig {
    int dimension = 1;
    /// quarter_power | two_bumps | mode:k[,l] | expr:<expression in x[, y]>
    std::string source = "quarter_power";
    /// t4 | power:p | expr:<expression in t>
    std::string profile = "t4";
    double final_time = 1.0;
    /// Time steps N. Zero ties the step to the mesh: N = cells, so tau = T/cells.
    int steps = 200;
    /// Mesh cells per side; several entries define refinement levels.
    std::vector<int> cells{251};
    /// Sensor counts n; several entries define a scaling study.
    std::vector<int> sensors{300};
    SensorLayout layout = SensorLayout::uniform_grid;
    NoiseModel noise_model = NoiseModel::Y2;
    NoiseDistribution noise_distribution = NoiseDistribution::gaussian;
    double sigma = 0.009;
    /// Choose sigma so that the rule returns `alpha` at the first sensor count.
    bool sigma_from_rule = false;
    /// Number of noise realizations; seeds are seed, seed + 1, ...
    int seeds = 10;
    std::uint64_t seed = 1;
    AlphaPolicy alpha_policy = AlphaPolicy::fixed;
    double alpha = 1e-6;
    std::vector<double> alphas{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    /// ||f*|| handed to the rule; defaults to the quadrature norm of the source.
    std::optional<double> source_norm;
    /// Sine modes per axis for the reference solution; 0 picks 400 (1D) or 60 (2D).
    int oracle_modes = 0;
    int max_iterations = 50;
    double tolerance = 1e-3;
    int threads = 1;
    /// Measurement CSV to reconstruct from instead of synthetic data.
    std::string data;
    /// Output directory; empty disables file output.
    std::string output;
    bool plots = true;
    bool allow_large = false;
};

struct ConfigKey {
    const char* name;
    const char* help;
};

/// Every key accepted by apply_setting, in canonical order.
std::span<const ConfigKey> config_schema();

/// Throws ConfigError for unknown keys or malformed values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// key = value lines; blank lines and text after '#' are ignored.
ExperimentConfig read_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Canonical key = value rendering; read_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

/// 64-bit FNV-1a of to_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Structural checks plus the desk-scale caps. Throws ConfigError.
void validate(const ExperimentConfig& config);

SpatialFunction make_source(const std::string& spec, int dimension);
TemporalProfile make_profile(const std::string& spec);

/// Least-squares line y = slope x + intercept.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

/// Throws InsufficientDataError for fewer than two points or constant x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Log-log fit of errors against a decreasing abscissa (h).
struct RateFit {
    std::vector<double> abscissa;
    std::vector<double> errors;
    /// false for levels excluded as plateau
    std::vector<bool> used;
    double slope = 0.0;
    double r_squared = 0.0;
};

/// Levels must be ordered by decreasing abscissa. With plateau exclusion a
/// level whose error drops by less than sqrt(h_prev / h) relative to the
/// previous level ends the usable range; it and all finer levels are left out.
/// Throws InsufficientDataError when fewer than three levels remain.
RateFit fit_rate(std::span<const double> abscissa, std::span<const double> errors, bool exclude_plateau = true);

/// One reconstruction measured against the known source.
struct Record {
    ErrorReport report;
    double residual = 0.0;
    double source_norm = 0.0;
};

struct LevelResult {
    int cells = 0;
    ErrorReport mean;
    std::vector<Record> runs;
};

struct HConvergenceResult {
    std::vector<LevelResult> levels;
    RateFit empirical;
    RateFit h_minus1;
};

/// Fixed alpha, one mesh level per entry of `cells` (coarse to fine).
HConvergenceResult run_h_convergence(const ExperimentConfig& config);

struct SweepRow {
    double alpha = 0.0;
    double empirical_error = 0.0;
    double l2_error = 0.0;
    double h_minus1_error = 0.0;
    double residual = 0.0;
    double source_norm = 0.0;
};

struct SweepResult {
    /// seed averages, in the order of config.alphas
    std::vector<SweepRow> rows;
    std::vector<Record> runs;
    std::size_t argmin_empirical = 0;
    std::size_t argmin_h_minus1 = 0;
    /// rule value for (sigma, n, ||f*||)
    std::optional<double> rule_alpha;
};

/// One Gram assembly, one Tikhonov solve per (alpha, seed).
SweepResult run_alpha_sweep(const ExperimentConfig& config);

struct ScalingRow {
    int n = 0;
    double alpha = 0.0;
    double empirical_error = 0.0;
    double h_minus1_error = 0.0;
    double residual = 0.0;
};

struct ScalingResult {
    std::vector<ScalingRow> rows;
    std::vector<Record> runs;
    /// empirical error against alpha^{1/2}
    LinearFit empirical;
    /// H^{-1} error against alpha^{1/4}
    LinearFit h_minus1;
    /// Errors barely change across n (noise below the discretization floor).
    bool degenerate = false;
    std::string diagnostic;
};

/// alpha from the rule for every n in config.sensors; requires alpha >= n^{-4/d}
/// (ConfigError otherwise).
ScalingResult run_scaling_study(const ExperimentConfig& config);

/// Reconstruction sampled on the mesh vertices, boundary included.
struct Snapshot {
    int dimension = 1;
    std::vector<Point> points;
    std::vector<double> reconstruction;
    std::vector<double> exact;
    ErrorReport::Metadata metadata;
};

struct SelfConsistentRun {
    std::uint64_t seed = 0;
    SelectionTrace trace;
    /// error report for every iterate of the trace
    std::vector<ErrorReport> iterations;
    Record final;
    bool degenerate = false;
    std::string diagnostic;
};

struct SelfConsistentResult {
    std::vector<SelfConsistentRun> runs;
    double mean_alpha = 0.0;
    double mean_residual = 0.0;
    double mean_iterations = 0.0;
    bool degenerate = false;
    /// reconstruction of the first seed
    Snapshot snapshot;
};

SelfConsistentResult run_self_consistent(const ExperimentConfig& config);

struct ForwardResult {
    Snapshot field;  // reconstruction = FEM u_h^N, exact = series oracle
    double max_error = 0.0;
    double relative_max_error = 0.0;
    double oracle_tail = 0.0;
    /// noisy sensor data for the first seed
    MeasurementSet measurements;
};

/// u_h^N on the first mesh level against the series oracle, plus synthetic data.
ForwardResult run_forward(const ExperimentConfig& config);

struct ReconstructionReport {
    double alpha = 0.0;
    Record record;
    std::optional<SelectionTrace> trace;
    Snapshot snapshot;
};

/// Single reconstruction with config.alpha_policy (fixed, rule or
/// self_consistent) on synthetic data or on config.data.
ReconstructionReport run_reconstruction(const ExperimentConfig& config);

// CSV writers. Every data row carries h, tau, n, sigma, alpha, seed and the
// config hash.
void write_csv(std::ostream& out, const HConvergenceResult& result, const ExperimentConfig& config);
void write_csv(std::ostream& out, const SweepResult& result, const ExperimentConfig& config);
void write_csv(std::ostream& out, const ScalingResult& result, const ExperimentConfig& config);
void write_csv(std::ostream& out, const SelfConsistentResult& result, const ExperimentConfig& config);
void write_csv(std::ostream& out, const Snapshot& snapshot, const ExperimentConfig& config);

/// Writes CSVs (and SVG plots when enabled) into config.output. Returns the
/// paths written.
std::vector<std::string> export_results(const HConvergenceResult& result, const ExperimentConfig& config);
std::vector<std::string> export_results(const SweepResult& result, const ExperimentConfig& config);
std::vector<std::string> export_results(const ScalingResult& result, const ExperimentConfig& config);
std::vector<std::string> export_results(const SelfConsistentResult& result, const ExperimentConfig& config);
std::vector<std::string> export_results(const ForwardResult& result, const ExperimentConfig& config);
std::vector<std::string> export_results(const ReconstructionReport& result, const ExperimentConfig& config);

}  // namespace waveinv::experiments
