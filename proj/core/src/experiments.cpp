#include "waveinv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "waveinv/errors.hpp"
#include "waveinv/expression.hpp"
#include "waveinv/plot.hpp"
#include "waveinv/quadrature.hpp"
#include "waveinv/spectral_oracle.hpp"
#include "waveinv/tikhonov.hpp"

namespace waveinv::experiments {

namespace {

constexpr ConfigKey kSchema[] = {
    {"dimension", "spatial dimension, 1 or 2"},
    {"source", "quarter_power | two_bumps | mode:k[,l] | expr:<expression in x[,y]>"},
    {"profile", "temporal factor g: t4 | power:p | expr:<expression in t>"},
    {"final_time", "final time T"},
    {"steps", "time steps N (tau = T/N); auto ties N to the mesh cells"},
    {"cells", "mesh cells per side, comma-separated list of levels"},
    {"sensors", "sensor counts n, comma-separated list"},
    {"layout", "uniform_grid | jittered_grid"},
    {"noise_model", "Y1 | Y2"},
    {"noise_distribution", "gaussian | uniform | rademacher"},
    {"sigma", "noise standard deviation, or rule to derive it from alpha"},
    {"seeds", "number of noise realizations"},
    {"seed", "first seed"},
    {"alpha_policy", "fixed | sweep | rule | self_consistent"},
    {"alpha", "fixed regularization parameter"},
    {"alphas", "sweep grid, comma-separated, strictly monotone"},
    {"source_norm", "||f*|| used by the rule, or auto"},
    {"oracle_modes", "sine modes per axis of the reference solution, 0 = default"},
    {"max_iterations", "iteration cap of the self-consistent selection"},
    {"tolerance", "relative stopping tolerance of the self-consistent selection"},
    {"threads", "worker threads"},
    {"data", "measurement CSV to reconstruct from"},
    {"output", "output directory"},
    {"plots", "write SVG plots next to the CSV files (true/false)"},
    {"allow_large", "lift the desk-scale caps on n and N_h (true/false)"},
};

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw ConfigError("config key '" + key + "': cannot read '" + value + "' as " + expected);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value, "a number");
    }
    if (used != value.size() || !std::isfinite(parsed)) {
        bad_value(key, value, "a number");
    }
    return parsed;
}

long long parse_integer(const std::string& key, const std::string& value) {
    // accept 9e4 style integers as well
    const double parsed = parse_double(key, value);
    if (parsed != std::floor(parsed) || std::abs(parsed) > 9e15) {
        bad_value(key, value, "an integer");
    }
    return static_cast<long long>(parsed);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    bad_value(key, value, "a boolean");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string current;
    for (char c : value) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!current.empty()) {
                items.push_back(current);
                current.clear();
            }
        } else {
            current += c;
        }
    }
    if (!current.empty()) {
        items.push_back(current);
    }
    return items;
}

std::string format_double(double value) {
    std::ostringstream out;
    out << std::setprecision(17) << value;
    return out.str();
}

template <class T, class F>
std::string join(const std::vector<T>& values, F&& format) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += format(values[i]);
    }
    return out;
}

AlphaPolicy parse_policy(const std::string& key, const std::string& value) {
    if (value == "fixed") return AlphaPolicy::fixed;
    if (value == "sweep") return AlphaPolicy::sweep;
    if (value == "rule") return AlphaPolicy::rule;
    if (value == "self_consistent") return AlphaPolicy::self_consistent;
    bad_value(key, value, "an alpha policy");
}

// Smooth compactly supported bump exp(1 - 1/(1 - r^2/R^2)), value 1 at the centre.
double bump(const Point& p, double cx, double cy, double radius) {
    const double r2 = ((p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy)) / (radius * radius);
    return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
}

constexpr double kStandinRadius = 0.25;
constexpr double kStandinLow = 0.32;
constexpr double kStandinHigh = 0.68;

// Two bumps with disjoint supports, so the squared norm is twice the one of a
// single bump: R^2 * 2 pi * int_0^1 exp(2 - 2/(1 - s^2)) s ds.
double standin_amplitude() {
    static const double amplitude = [] {
        const double radial = quadrature::adaptive(
            [](double s) { return s < 1.0 ? std::exp(2.0 - 2.0 / (1.0 - s * s)) * s : 0.0; }, 0.0, 1.0, 8);
        const double single = kStandinRadius * kStandinRadius * 2.0 * M_PI * radial;
        return kStandinNorm / std::sqrt(2.0 * single);
    }();
    return amplitude;
}

int effective_steps(const ExperimentConfig& config, int cells) { return config.steps > 0 ? config.steps : cells; }

int default_modes(int dimension) { return dimension == 1 ? 400 : 60; }

template <class Body>
void parallel_for(int count, int threads, Body&& body) {
    const int workers = std::min(std::max(threads, 1), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& thread : pool) {
        thread.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

// The source, its temporal factor and the series reference for Gf*.
struct Problem {
    int dimension = 1;
    SpatialFunction source;
    TemporalProfile profile;
    double final_time = 1.0;
    std::shared_ptr<const SpectralOracle> oracle;

    double norm(const ExperimentConfig& config) const {
        return config.source_norm.value_or(oracle->source_norm());
    }
};

Problem make_problem(const ExperimentConfig& config) {
    Problem problem{config.dimension, make_source(config.source, config.dimension), make_profile(config.profile),
                    config.final_time, nullptr};
    SpectralOracle::Options options;
    options.k_max = config.oracle_modes > 0 ? config.oracle_modes : default_modes(config.dimension);
    if (config.dimension == 2) {
        // tensor rule: keep it ungraded, the 2D builtins are smooth
        options.quadrature.panels = 2 * options.k_max;
        options.quadrature.grading_levels = 0;
    }
    problem.oracle = std::make_shared<SpectralOracle>(config.dimension, problem.source, problem.profile,
                                                      config.final_time, options);
    return problem;
}

// Everything attached to one mesh: matrices, time stepper, projection of f*.
struct Level {
    Mesh mesh;
    FEMatrices fe;
    TimeGrid grid;
    std::unique_ptr<ForwardSolver> solver;
    std::unique_ptr<DualNorm> dual;
    Vector projection;
    Matrix response;

    Level(const Problem& problem, const ExperimentConfig& config, int cells)
        : mesh(problem.dimension == 1 ? build_interval_mesh(cells) : build_square_mesh(cells)),
          fe(assemble(mesh)),
          grid(make_time_grid(config.final_time, effective_steps(config, cells))) {
        solver = std::make_unique<ForwardSolver>(fe, grid, problem.profile);
        dual = std::make_unique<DualNorm>(fe.mass, fe.stiffness);
        projection = project_l2(mesh, fe.mass, problem.source);
        GramOptions options;
        options.threads = config.threads;
        response = forward_response(*solver, options);
    }

    ForwardOperatorSample sample(const SensorSet& sensors) const { return sample_forward(response, mesh, sensors); }
};

ErrorReport::Metadata metadata(const Level& level, int n, double sigma, double alpha, std::uint64_t seed) {
    return {level.mesh.h(), level.grid.step(), n, sigma, alpha, seed};
}

Record measure(const Level& level, const ForwardOperatorSample& sample, std::span<const double> clean,
               const ReconstructionResult& result, ErrorReport::Metadata meta) {
    Record record;
    const Vector predicted = sample.sensor_values(result.coefficients);
    std::vector<double> difference(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        difference[i] = clean[i] - predicted[static_cast<Eigen::Index>(i)];
    }
    const Vector error = level.projection - result.coefficients;
    record.report.empirical_error = empirical_norm(difference);
    record.report.l2_error = l2_norm(level.fe.mass, error);
    record.report.h_minus1_error = (*level.dual)(error);
    record.report.metadata = meta;
    record.residual = result.residual;
    record.source_norm = result.source_norm;
    return record;
}

ErrorReport mean_report(const std::vector<Record>& records) {
    ErrorReport mean;
    if (records.empty()) {
        return mean;
    }
    for (const Record& r : records) {
        mean.empirical_error += r.report.empirical_error;
        mean.l2_error += r.report.l2_error;
        mean.h_minus1_error += r.report.h_minus1_error;
    }
    const double count = static_cast<double>(records.size());
    mean.empirical_error /= count;
    mean.l2_error /= count;
    mean.h_minus1_error /= count;
    mean.metadata = records.front().report.metadata;
    return mean;
}

NoiseSpec noise_for(const ExperimentConfig& config, double sigma, int run) {
    return NoiseSpec{config.noise_model, sigma, config.noise_distribution, config.seed + static_cast<std::uint64_t>(run)};
}

double noise_level(const ExperimentConfig& config, const Problem& problem, int n) {
    if (!config.sigma_from_rule) {
        return config.sigma;
    }
    // invert the rule: sigma = alpha^{1/2 + d/8} sqrt(n) ||f*||
    return std::pow(config.alpha, 0.5 + config.dimension / 8.0) * std::sqrt(static_cast<double>(n)) *
           problem.norm(config);
}

Snapshot make_snapshot(const Level& level, const Problem& problem, const Vector& coefficients,
                       const ErrorReport::Metadata& meta) {
    Snapshot snapshot;
    snapshot.dimension = level.mesh.dimension();
    snapshot.metadata = meta;
    for (const Point& p : level.mesh.vertices()) {
        snapshot.points.push_back(p);
        snapshot.reconstruction.push_back(level.mesh.evaluate(coefficients, p));
        snapshot.exact.push_back(problem.source(p));
    }
    return snapshot;
}

std::vector<double> clean_values(const Problem& problem, const SensorSet& sensors) {
    return problem.oracle->evaluate(sensors.points);
}

// CSV helpers -------------------------------------------------------------

constexpr const char* kMetaColumns = "h,tau,n,sigma,alpha,seed,config_hash";

void write_meta(std::ostream& out, const ErrorReport::Metadata& meta, const std::string& seed, const std::string& hash) {
    out << format_double(meta.h) << ',' << format_double(meta.tau) << ',' << meta.n << ','
        << format_double(meta.sigma) << ',' << format_double(meta.alpha) << ',' << seed << ',' << hash;
}

void write_errors(std::ostream& out, const ErrorReport& report) {
    out << ',' << format_double(report.empirical_error) << ',' << format_double(report.l2_error) << ','
        << format_double(report.h_minus1_error);
}

void write_config_comment(std::ostream& out, const ExperimentConfig& config) {
    out << "# config_hash=" << config_hash(config) << '\n';
    std::istringstream lines(to_text(config));
    std::string line;
    while (std::getline(lines, line)) {
        out << "# " << line << '\n';
    }
}

void write_snapshot(std::ostream& out, const Snapshot& snapshot, const ExperimentConfig& config, const char* computed,
                    const char* reference) {
    const std::string hash = config_hash(config);
    write_config_comment(out, config);
    out << kMetaColumns << (snapshot.dimension == 1 ? ",x" : ",x,y") << ',' << computed << ',' << reference << '\n';
    for (std::size_t i = 0; i < snapshot.points.size(); ++i) {
        write_meta(out, snapshot.metadata, std::to_string(snapshot.metadata.seed), hash);
        out << ',' << format_double(snapshot.points[i].x);
        if (snapshot.dimension == 2) {
            out << ',' << format_double(snapshot.points[i].y);
        }
        out << ',' << format_double(snapshot.reconstruction[i]) << ',' << format_double(snapshot.exact[i]) << '\n';
    }
}

std::filesystem::path output_dir(const ExperimentConfig& config) {
    if (config.output.empty()) {
        throw ConfigError("no output directory configured");
    }
    std::filesystem::path dir(config.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + config.output + ": " + ec.message());
    }
    return dir;
}

template <class Writer>
std::string write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    writer(out);
    return path.string();
}

std::string save_config(const std::filesystem::path& dir, const ExperimentConfig& config) {
    return write_file(dir / "config.txt", [&](std::ostream& out) { out << to_text(config); });
}

}  // namespace

std::string to_string(AlphaPolicy policy) {
    switch (policy) {
        case AlphaPolicy::fixed: return "fixed";
        case AlphaPolicy::sweep: return "sweep";
        case AlphaPolicy::rule: return "rule";
        case AlphaPolicy::self_consistent: return "self_consistent";
    }
    return "fixed";
}

std::span<const ConfigKey> config_schema() { return kSchema; }

void apply_setting(ExperimentConfig& config, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    auto int_value = [&] { return static_cast<int>(parse_integer(key, value)); };
    try {
        if (key == "dimension") {
            config.dimension = int_value();
        } else if (key == "source") {
            config.source = value;
        } else if (key == "profile") {
            config.profile = value;
        } else if (key == "final_time") {
            config.final_time = parse_double(key, value);
        } else if (key == "steps") {
            config.steps = value == "auto" ? 0 : int_value();
        } else if (key == "cells" || key == "sensors") {
            std::vector<int> list;
            for (const auto& item : split_list(value)) {
                list.push_back(static_cast<int>(parse_integer(key, item)));
            }
            (key == "cells" ? config.cells : config.sensors) = std::move(list);
        } else if (key == "layout") {
            config.layout = parse_sensor_layout(value);
        } else if (key == "noise_model") {
            config.noise_model = parse_noise_model(value);
        } else if (key == "noise_distribution") {
            config.noise_distribution = parse_noise_distribution(value);
        } else if (key == "sigma") {
            config.sigma_from_rule = value == "rule";
            if (!config.sigma_from_rule) {
                config.sigma = parse_double(key, value);
            }
        } else if (key == "seeds") {
            config.seeds = int_value();
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(parse_integer(key, value));
        } else if (key == "alpha_policy") {
            config.alpha_policy = parse_policy(key, value);
        } else if (key == "alpha") {
            config.alpha = parse_double(key, value);
        } else if (key == "alphas") {
            std::vector<double> list;
            for (const auto& item : split_list(value)) {
                list.push_back(parse_double(key, item));
            }
            config.alphas = std::move(list);
        } else if (key == "source_norm") {
            if (value == "auto") {
                config.source_norm.reset();
            } else {
                config.source_norm = parse_double(key, value);
            }
        } else if (key == "oracle_modes") {
            config.oracle_modes = int_value();
        } else if (key == "max_iterations") {
            config.max_iterations = int_value();
        } else if (key == "tolerance") {
            config.tolerance = parse_double(key, value);
        } else if (key == "threads") {
            config.threads = int_value();
        } else if (key == "data") {
            config.data = value;
        } else if (key == "output") {
            config.output = value;
        } else if (key == "plots") {
            config.plots = parse_bool(key, value);
        } else if (key == "allow_large") {
            config.allow_large = parse_bool(key, value);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const InvalidArgument& e) {
        // enum parsers
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

ExperimentConfig read_config(std::istream& in, ExperimentConfig config) {
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
        }
        apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    }
    return config;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    return read_config(in, std::move(base));
}

std::string to_text(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "dimension = " << c.dimension << '\n';
    out << "source = " << c.source << '\n';
    out << "profile = " << c.profile << '\n';
    out << "final_time = " << format_double(c.final_time) << '\n';
    out << "steps = " << (c.steps > 0 ? std::to_string(c.steps) : std::string("auto")) << '\n';
    out << "cells = " << join(c.cells, [](int v) { return std::to_string(v); }) << '\n';
    out << "sensors = " << join(c.sensors, [](int v) { return std::to_string(v); }) << '\n';
    out << "layout = " << to_string(c.layout) << '\n';
    out << "noise_model = " << to_string(c.noise_model) << '\n';
    out << "noise_distribution = " << to_string(c.noise_distribution) << '\n';
    out << "sigma = " << (c.sigma_from_rule ? std::string("rule") : format_double(c.sigma)) << '\n';
    out << "seeds = " << c.seeds << '\n';
    out << "seed = " << c.seed << '\n';
    out << "alpha_policy = " << to_string(c.alpha_policy) << '\n';
    out << "alpha = " << format_double(c.alpha) << '\n';
    out << "alphas = " << join(c.alphas, format_double) << '\n';
    out << "source_norm = " << (c.source_norm ? format_double(*c.source_norm) : std::string("auto")) << '\n';
    out << "oracle_modes = " << c.oracle_modes << '\n';
    out << "max_iterations = " << c.max_iterations << '\n';
    out << "tolerance = " << format_double(c.tolerance) << '\n';
    out << "threads = " << c.threads << '\n';
    // data and output are written only when set: an empty value is not a valid line
    if (!c.data.empty()) {
        out << "data = " << c.data << '\n';
    }
    if (!c.output.empty()) {
        out << "output = " << c.output << '\n';
    }
    out << "plots = " << (c.plots ? "true" : "false") << '\n';
    out << "allow_large = " << (c.allow_large ? "true" : "false") << '\n';
    return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
    // output location and thread count do not change results
    ExperimentConfig canonical = config;
    canonical.output.clear();
    canonical.threads = 1;
    canonical.plots = true;
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : to_text(canonical)) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << hash;
    return out.str();
}

void validate(const ExperimentConfig& c) {
    if (c.dimension != 1 && c.dimension != 2) {
        throw ConfigError("dimension must be 1 or 2");
    }
    try {
        (void)make_source(c.source, c.dimension);
        if (!make_profile(c.profile).compatible()) {
            throw ConfigError("profile '" + c.profile + "' violates g^(k)(0) = 0 for k = 0..3");
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (!(c.final_time > 0.0)) {
        throw ConfigError("final_time must be positive");
    }
    if (c.steps < 0) {
        throw ConfigError("steps must be positive (or auto)");
    }
    if (c.cells.empty() || c.sensors.empty()) {
        throw ConfigError("cells and sensors must be non-empty lists");
    }
    for (int cells : c.cells) {
        if (cells < 2) {
            throw ConfigError("every mesh needs at least 2 cells per side");
        }
        const double dofs = std::pow(cells - 1.0, c.dimension);
        if (dofs > kMaxDofs && !c.allow_large) {
            throw ConfigError("mesh with " + std::to_string(cells) + " cells has " + format_double(dofs) +
                              " dofs, above the desk-scale cap of " + std::to_string(kMaxDofs) +
                              " (set allow_large = true)");
        }
    }
    for (int n : c.sensors) {
        if (n < 1) {
            throw ConfigError("sensor counts must be positive");
        }
        if (n > kMaxSensors && !c.allow_large) {
            throw ConfigError("n = " + std::to_string(n) + " exceeds the desk-scale cap of " +
                              std::to_string(kMaxSensors) + " (set allow_large = true)");
        }
        if (c.dimension == 2) {
            const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
            if (side * side != n) {
                throw ConfigError("2D sensor grids need a perfect-square n, got " + std::to_string(n));
            }
        }
    }
    if (!(c.sigma >= 0.0)) {
        throw ConfigError("sigma must be non-negative");
    }
    if (c.seeds < 1) {
        throw ConfigError("seeds must be at least 1");
    }
    if (!(c.alpha > 0.0)) {
        throw ConfigError("alpha must be positive");
    }
    if (c.alphas.empty()) {
        throw ConfigError("alphas must not be empty");
    }
    for (std::size_t i = 0; i < c.alphas.size(); ++i) {
        if (!(c.alphas[i] > 0.0)) {
            throw ConfigError("alphas must be strictly positive");
        }
    }
    if (c.alphas.size() > 1) {
        const bool decreasing = std::is_sorted(c.alphas.begin(), c.alphas.end(), std::greater<>()) &&
                                std::adjacent_find(c.alphas.begin(), c.alphas.end()) == c.alphas.end();
        const bool increasing = std::is_sorted(c.alphas.begin(), c.alphas.end()) &&
                                std::adjacent_find(c.alphas.begin(), c.alphas.end()) == c.alphas.end();
        if (!decreasing && !increasing) {
            throw ConfigError("alphas must be strictly sorted");
        }
    }
    if (c.source_norm && !(*c.source_norm > 0.0)) {
        throw ConfigError("source_norm must be positive");
    }
    if (c.oracle_modes < 0 || c.max_iterations < 1 || !(c.tolerance > 0.0) || c.threads < 1) {
        throw ConfigError("oracle_modes >= 0, max_iterations >= 1, tolerance > 0 and threads >= 1 required");
    }
}

SpatialFunction make_source(const std::string& spec, int dimension) {
    if (spec == "quarter_power") {
        if (dimension != 1) {
            throw ConfigError("source quarter_power is one-dimensional");
        }
        return [](const Point& p) { return std::pow(std::max(0.0, p.x * (1.0 - p.x)), 0.25); };
    }
    if (spec == "two_bumps") {
        if (dimension != 2) {
            throw ConfigError("source two_bumps is two-dimensional");
        }
        const double a = standin_amplitude();
        return [a](const Point& p) {
            return a * (bump(p, kStandinLow, kStandinLow, kStandinRadius) +
                        bump(p, kStandinHigh, kStandinHigh, kStandinRadius));
        };
    }
    if (spec.rfind("mode:", 0) == 0) {
        const auto parts = split_list(spec.substr(5));
        if (static_cast<int>(parts.size()) != dimension) {
            throw ConfigError("source " + spec + ": expected " + std::to_string(dimension) + " mode indices");
        }
        const int k = static_cast<int>(parse_integer("source", parts[0]));
        const int l = dimension == 2 ? static_cast<int>(parse_integer("source", parts[1])) : 0;
        if (k < 1 || (dimension == 2 && l < 1)) {
            throw ConfigError("source " + spec + ": mode indices start at 1");
        }
        if (dimension == 1) {
            return [k](const Point& p) { return std::sqrt(2.0) * std::sin(k * M_PI * p.x); };
        }
        return [k, l](const Point& p) { return 2.0 * std::sin(k * M_PI * p.x) * std::sin(l * M_PI * p.y); };
    }
    if (spec.rfind("expr:", 0) == 0) {
        Expression e = Expression::parse(spec.substr(5), dimension == 1 ? "x" : "xy");
        return [e](const Point& p) { return e(p.x, p.y); };
    }
    throw ConfigError("unknown source '" + spec + "'");
}

TemporalProfile make_profile(const std::string& spec) {
    if (spec == "t4") {
        return TemporalProfile::power(4);
    }
    if (spec.rfind("power:", 0) == 0) {
        const long long p = parse_integer("profile", spec.substr(6));
        if (p < 0 || p > 64) {
            throw ConfigError("profile " + spec + ": exponent out of range");
        }
        return TemporalProfile::power(static_cast<int>(p));
    }
    if (spec.rfind("expr:", 0) == 0) {
        Expression e = Expression::parse(spec.substr(5), "t");
        return TemporalProfile(spec, [e](double t) { return e(0.0, 0.0, t); });
    }
    throw ConfigError("unknown profile '" + spec + "'");
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InvalidArgument("fit_line: x and y differ in length");
    }
    if (x.size() < 2) {
        throw InsufficientDataError("fit_line: need at least two points");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw InsufficientDataError("fit_line: abscissa values are all equal");
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.points = static_cast<int>(x.size());
    return fit;
}

RateFit fit_rate(std::span<const double> abscissa, std::span<const double> errors, bool exclude_plateau) {
    if (abscissa.size() != errors.size()) {
        throw InvalidArgument("fit_rate: abscissa and errors differ in length");
    }
    RateFit fit;
    fit.abscissa.assign(abscissa.begin(), abscissa.end());
    fit.errors.assign(errors.begin(), errors.end());
    fit.used.assign(abscissa.size(), true);
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        if (!(abscissa[i] > 0.0) || !(errors[i] > 0.0)) {
            throw InvalidArgument("fit_rate: abscissa and errors must be positive");
        }
        if (i > 0 && !(abscissa[i] < abscissa[i - 1])) {
            throw InvalidArgument("fit_rate: abscissa must be strictly decreasing");
        }
    }
    if (exclude_plateau) {
        for (std::size_t i = 1; i < abscissa.size(); ++i) {
            const double required = std::sqrt(abscissa[i - 1] / abscissa[i]);
            if (errors[i - 1] / errors[i] < required) {
                std::fill(fit.used.begin() + static_cast<std::ptrdiff_t>(i), fit.used.end(), false);
                break;
            }
        }
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        if (fit.used[i]) {
            lx.push_back(std::log(abscissa[i]));
            ly.push_back(std::log(errors[i]));
        }
    }
    if (lx.size() < 3) {
        throw InsufficientDataError("rate fit needs at least 3 usable levels, have " + std::to_string(lx.size()) +
                                    " of " + std::to_string(abscissa.size()));
    }
    const LinearFit line = fit_line(lx, ly);
    fit.slope = line.slope;
    fit.r_squared = line.r_squared;
    return fit;
}

HConvergenceResult run_h_convergence(const ExperimentConfig& config) {
    validate(config);
    if (config.cells.size() < 3) {
        throw InsufficientDataError("h-convergence needs at least 3 mesh levels, got " +
                                    std::to_string(config.cells.size()));
    }
    std::vector<int> cells = config.cells;
    std::sort(cells.begin(), cells.end());
    if (std::adjacent_find(cells.begin(), cells.end()) != cells.end()) {
        throw ConfigError("mesh levels must be distinct");
    }
    const Problem problem = make_problem(config);
    const int n = config.sensors.front();
    const double sigma = noise_level(config, problem, n);
    const SensorSet sensors = make_sensors(config.dimension, n, config.layout, config.seed);
    const std::vector<double> clean = clean_values(problem, sensors);

    HConvergenceResult result;
    for (int level_cells : cells) {
        const Level level(problem, config, level_cells);
        const ForwardOperatorSample sample = level.sample(sensors);
        LevelResult row;
        row.cells = level_cells;
        row.runs.resize(static_cast<std::size_t>(config.seeds));
        parallel_for(config.seeds, config.threads, [&](int run) {
            const NoiseSpec noise = noise_for(config, sigma, run);
            const MeasurementSet data = synthesize(sensors, clean, noise);
            const TikhonovProblem tikhonov(sample, level.fe.mass, data.values);
            const ReconstructionResult fit = tikhonov.solve(config.alpha);
            row.runs[static_cast<std::size_t>(run)] =
                measure(level, sample, clean, fit, metadata(level, n, sigma, config.alpha, noise.seed));
        });
        row.mean = mean_report(row.runs);
        result.levels.push_back(std::move(row));
    }
    std::vector<double> h, empirical, h_minus1;
    for (const auto& level : result.levels) {
        h.push_back(level.mean.metadata.h);
        empirical.push_back(level.mean.empirical_error);
        h_minus1.push_back(level.mean.h_minus1_error);
    }
    result.empirical = fit_rate(h, empirical);
    result.h_minus1 = fit_rate(h, h_minus1);
    return result;
}

SweepResult run_alpha_sweep(const ExperimentConfig& config) {
    validate(config);
    const Problem problem = make_problem(config);
    const int n = config.sensors.front();
    const double sigma = noise_level(config, problem, n);
    const SensorSet sensors = make_sensors(config.dimension, n, config.layout, config.seed);
    const std::vector<double> clean = clean_values(problem, sensors);
    const Level level(problem, config, config.cells.front());
    const ForwardOperatorSample sample = level.sample(sensors);

    const std::size_t count = config.alphas.size();
    SweepResult result;
    result.runs.resize(count * static_cast<std::size_t>(config.seeds));
    parallel_for(config.seeds, config.threads, [&](int run) {
        const NoiseSpec noise = noise_for(config, sigma, run);
        const MeasurementSet data = synthesize(sensors, clean, noise);
        const TikhonovProblem tikhonov(sample, level.fe.mass, data.values);
        for (std::size_t a = 0; a < count; ++a) {
            const double alpha = config.alphas[a];
            result.runs[a * static_cast<std::size_t>(config.seeds) + static_cast<std::size_t>(run)] =
                measure(level, sample, clean, tikhonov.solve(alpha), metadata(level, n, sigma, alpha, noise.seed));
        }
    });
    for (std::size_t a = 0; a < count; ++a) {
        SweepRow row;
        row.alpha = config.alphas[a];
        for (int run = 0; run < config.seeds; ++run) {
            const Record& r = result.runs[a * static_cast<std::size_t>(config.seeds) + static_cast<std::size_t>(run)];
            row.empirical_error += r.report.empirical_error / config.seeds;
            row.l2_error += r.report.l2_error / config.seeds;
            row.h_minus1_error += r.report.h_minus1_error / config.seeds;
            row.residual += r.residual / config.seeds;
            row.source_norm += r.source_norm / config.seeds;
        }
        result.rows.push_back(row);
    }
    auto argmin = [&](auto member) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < count; ++a) {
            if (result.rows[a].*member < result.rows[best].*member) {
                best = a;
            }
        }
        return best;
    };
    result.argmin_empirical = argmin(&SweepRow::empirical_error);
    result.argmin_h_minus1 = argmin(&SweepRow::h_minus1_error);
    if (sigma > 0.0) {
        result.rule_alpha = rule_alpha(sigma, n, config.dimension, problem.norm(config));
    }
    return result;
}

ScalingResult run_scaling_study(const ExperimentConfig& config) {
    validate(config);
    if (config.sensors.size() < 3) {
        throw InsufficientDataError("scaling study needs at least 3 sensor counts, got " +
                                    std::to_string(config.sensors.size()));
    }
    ScalingResult result;
    if (config.sigma == 0.0 && !config.sigma_from_rule) {
        result.degenerate = true;
        result.diagnostic = "sigma = 0: the rule gives alpha = 0, nothing to fit";
        return result;
    }
    const Problem problem = make_problem(config);
    const double norm = problem.norm(config);
    const double sigma = config.sigma_from_rule ? noise_level(config, problem, config.sensors.front()) : config.sigma;
    for (int n : config.sensors) {
        const double alpha = rule_alpha(sigma, n, config.dimension, norm);
        const double floor = std::pow(static_cast<double>(n), -4.0 / config.dimension);
        if (alpha < floor) {
            throw ConfigError("rule alpha " + format_double(alpha) + " at n = " + std::to_string(n) +
                              " is below n^{-4/d} = " + format_double(floor) +
                              "; the error estimates need alpha >= n^{-4/d}");
        }
    }
    const Level level(problem, config, config.cells.front());
    for (int n : config.sensors) {
        const double alpha = rule_alpha(sigma, n, config.dimension, norm);
        const SensorSet sensors = make_sensors(config.dimension, n, config.layout, config.seed);
        const std::vector<double> clean = clean_values(problem, sensors);
        const ForwardOperatorSample sample = level.sample(sensors);
        std::vector<Record> runs(static_cast<std::size_t>(config.seeds));
        parallel_for(config.seeds, config.threads, [&](int run) {
            const NoiseSpec noise = noise_for(config, sigma, run);
            const MeasurementSet data = synthesize(sensors, clean, noise);
            const TikhonovProblem tikhonov(sample, level.fe.mass, data.values);
            runs[static_cast<std::size_t>(run)] =
                measure(level, sample, clean, tikhonov.solve(alpha), metadata(level, n, sigma, alpha, noise.seed));
        });
        ScalingRow row;
        row.n = n;
        row.alpha = alpha;
        const ErrorReport mean = mean_report(runs);
        row.empirical_error = mean.empirical_error;
        row.h_minus1_error = mean.h_minus1_error;
        for (const Record& r : runs) {
            row.residual += r.residual / config.seeds;
        }
        result.rows.push_back(row);
        result.runs.insert(result.runs.end(), runs.begin(), runs.end());
    }
    std::vector<double> root, quarter, empirical, h_minus1;
    for (const auto& row : result.rows) {
        root.push_back(std::sqrt(row.alpha));
        quarter.push_back(std::pow(row.alpha, 0.25));
        empirical.push_back(row.empirical_error);
        h_minus1.push_back(row.h_minus1_error);
    }
    result.empirical = fit_line(root, empirical);
    result.h_minus1 = fit_line(quarter, h_minus1);
    auto spread = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return (*hi - *lo) / *hi;
    };
    if (spread(empirical) < 0.1 || spread(h_minus1) < 0.1 || result.empirical.slope <= 0.0 ||
        result.h_minus1.slope <= 0.0) {
        result.degenerate = true;
        result.diagnostic = "errors do not follow alpha across n; the noise is likely below the discretization floor";
    }
    return result;
}

SelfConsistentResult run_self_consistent(const ExperimentConfig& config) {
    validate(config);
    const Problem problem = make_problem(config);
    const int n = config.sensors.front();
    const double sigma = noise_level(config, problem, n);
    const SensorSet sensors = make_sensors(config.dimension, n, config.layout, config.seed);
    const std::vector<double> clean = clean_values(problem, sensors);
    const Level level(problem, config, config.cells.front());
    const ForwardOperatorSample sample = level.sample(sensors);

    SelectionOptions options;
    options.max_iterations = config.max_iterations;
    options.tolerance = config.tolerance;

    SelfConsistentResult result;
    result.runs.resize(static_cast<std::size_t>(config.seeds));
    std::vector<Vector> finals(static_cast<std::size_t>(config.seeds));
    parallel_for(config.seeds, config.threads, [&](int run) {
        SelfConsistentRun& out = result.runs[static_cast<std::size_t>(run)];
        const NoiseSpec noise = noise_for(config, sigma, run);
        out.seed = noise.seed;
        const MeasurementSet data = synthesize(sensors, clean, noise);
        const TikhonovProblem tikhonov(sample, level.fe.mass, data.values);
        auto observer = [&](const SelectionStep& step, const ReconstructionResult& fit) {
            out.iterations.push_back(
                measure(level, sample, clean, fit, metadata(level, n, sigma, step.alpha, noise.seed)).report);
        };
        try {
            Selection selection = self_consistent(tikhonov, config.dimension, options, observer);
            out.trace = std::move(selection.trace);
            out.final = measure(level, sample, clean, selection.reconstruction,
                                metadata(level, n, sigma, selection.reconstruction.alpha, noise.seed));
            finals[static_cast<std::size_t>(run)] = std::move(selection.reconstruction.coefficients);
            if (sigma == 0.0) {
                out.degenerate = true;
                out.diagnostic = "noiseless data: alpha is driven toward the discretization floor";
            }
            if (out.trace.stop != StopReason::converged) {
                out.diagnostic = out.trace.diagnostic;
            }
        } catch (const DegenerateDataError& e) {
            out.degenerate = true;
            out.diagnostic = e.what();
        }
    });
    int counted = 0;
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const auto& run = result.runs[i];
        result.degenerate = result.degenerate || run.degenerate;
        if (run.trace.steps.empty()) {
            continue;
        }
        ++counted;
        result.mean_alpha += run.trace.final_alpha;
        result.mean_residual += run.final.residual;
        result.mean_iterations += static_cast<double>(run.trace.steps.size());
        if (result.snapshot.points.empty() && finals[i].size() > 0) {
            result.snapshot = make_snapshot(level, problem, finals[i], run.final.report.metadata);
        }
    }
    if (counted > 0) {
        result.mean_alpha /= counted;
        result.mean_residual /= counted;
        result.mean_iterations /= counted;
    }
    return result;
}

ForwardResult run_forward(const ExperimentConfig& config) {
    validate(config);
    const Problem problem = make_problem(config);
    const Mesh mesh = config.dimension == 1 ? build_interval_mesh(config.cells.front())
                                            : build_square_mesh(config.cells.front());
    const FEMatrices fe = assemble(mesh);
    const ForwardSolver solver(fe, make_time_grid(config.final_time, effective_steps(config, config.cells.front())),
                               problem.profile);
    const Vector state = solver.final_state(mesh.interpolate(problem.source));

    const int n = config.sensors.front();
    const double sigma = noise_level(config, problem, n);
    const NoiseSpec noise = noise_for(config, sigma, 0);
    ForwardResult result;
    result.field.dimension = config.dimension;
    // no reconstruction here, so alpha is recorded as 0
    result.field.metadata = {mesh.h(), solver.grid().step(), n, sigma, 0.0, noise.seed};
    result.field.points.assign(mesh.vertices().begin(), mesh.vertices().end());
    result.field.exact = problem.oracle->evaluate(result.field.points);
    double scale = 0.0;
    for (std::size_t i = 0; i < result.field.points.size(); ++i) {
        const double value = mesh.evaluate(state, result.field.points[i]);
        result.field.reconstruction.push_back(value);
        result.max_error = std::max(result.max_error, std::abs(value - result.field.exact[i]));
        scale = std::max(scale, std::abs(result.field.exact[i]));
    }
    result.relative_max_error = scale > 0.0 ? result.max_error / scale : result.max_error;
    result.oracle_tail = problem.oracle->tail_estimate();

    const SensorSet sensors = make_sensors(config.dimension, n, config.layout, config.seed);
    result.measurements = synthesize(sensors, clean_values(problem, sensors), noise);
    return result;
}

ReconstructionReport run_reconstruction(const ExperimentConfig& config) {
    validate(config);
    if (config.alpha_policy == AlphaPolicy::sweep) {
        throw ConfigError("alpha_policy = sweep belongs to the sweep subcommand");
    }
    const Problem problem = make_problem(config);
    MeasurementSet data;
    if (!config.data.empty()) {
        std::ifstream in(config.data);
        if (!in) {
            throw ConfigError("cannot open measurement file " + config.data);
        }
        data = read_measurements_csv(in);
        if (data.sensors.dimension != config.dimension) {
            throw ConfigError("measurement file is " + std::to_string(data.sensors.dimension) +
                              "D, config says " + std::to_string(config.dimension) + "D");
        }
    } else {
        const int n = config.sensors.front();
        const SensorSet sensors = make_sensors(config.dimension, n, config.layout, config.seed);
        data = synthesize(sensors, clean_values(problem, sensors),
                          noise_for(config, noise_level(config, problem, n), 0));
    }
    const int n = static_cast<int>(data.size());
    const std::vector<double> clean = clean_values(problem, data.sensors);
    const Level level(problem, config, config.cells.front());
    const ForwardOperatorSample sample = level.sample(data.sensors);
    const TikhonovProblem tikhonov(sample, level.fe.mass, data.values);

    ReconstructionReport report;
    ReconstructionResult fit;
    switch (config.alpha_policy) {
        case AlphaPolicy::fixed:
            fit = tikhonov.solve(config.alpha);
            break;
        case AlphaPolicy::rule:
            if (!(data.noise.sigma > 0.0)) {
                throw ConfigError("alpha_policy = rule needs a positive sigma");
            }
            fit = tikhonov.solve(rule_alpha(data.noise.sigma, n, config.dimension, problem.norm(config)));
            break;
        case AlphaPolicy::self_consistent: {
            SelectionOptions options;
            options.max_iterations = config.max_iterations;
            options.tolerance = config.tolerance;
            Selection selection = self_consistent(tikhonov, config.dimension, options);
            fit = std::move(selection.reconstruction);
            report.trace = std::move(selection.trace);
            break;
        }
        case AlphaPolicy::sweep:
            break;
    }
    report.alpha = fit.alpha;
    report.record = measure(level, sample, clean, fit, metadata(level, n, data.noise.sigma, fit.alpha, data.noise.seed));
    report.snapshot = make_snapshot(level, problem, fit.coefficients, report.record.report.metadata);
    return report;
}

// CSV -------------------------------------------------------------------------

void write_csv(std::ostream& out, const HConvergenceResult& result, const ExperimentConfig& config) {
    const std::string hash = config_hash(config);
    write_config_comment(out, config);
    out << "# empirical_slope=" << format_double(result.empirical.slope)
        << " r2=" << format_double(result.empirical.r_squared) << '\n';
    out << "# h_minus1_slope=" << format_double(result.h_minus1.slope)
        << " r2=" << format_double(result.h_minus1.r_squared) << '\n';
    out << "cells," << kMetaColumns << ",empirical_error,l2_error,h_minus1_error,residual_n,f_norm\n";
    for (const auto& level : result.levels) {
        for (const auto& run : level.runs) {
            out << level.cells << ',';
            write_meta(out, run.report.metadata, std::to_string(run.report.metadata.seed), hash);
            write_errors(out, run.report);
            out << ',' << format_double(run.residual) << ',' << format_double(run.source_norm) << '\n';
        }
    }
}

void write_csv(std::ostream& out, const SweepResult& result, const ExperimentConfig& config) {
    const std::string hash = config_hash(config);
    write_config_comment(out, config);
    if (result.rule_alpha) {
        out << "# rule_alpha=" << format_double(*result.rule_alpha) << '\n';
    }
    out << "# argmin_empirical=" << format_double(result.rows[result.argmin_empirical].alpha)
        << " argmin_h_minus1=" << format_double(result.rows[result.argmin_h_minus1].alpha) << '\n';
    out << kMetaColumns << ",empirical_error,l2_error,h_minus1_error,residual_n,f_norm\n";
    for (const auto& run : result.runs) {
        write_meta(out, run.report.metadata, std::to_string(run.report.metadata.seed), hash);
        write_errors(out, run.report);
        out << ',' << format_double(run.residual) << ',' << format_double(run.source_norm) << '\n';
    }
}

void write_csv(std::ostream& out, const ScalingResult& result, const ExperimentConfig& config) {
    const std::string hash = config_hash(config);
    write_config_comment(out, config);
    out << "# empirical_vs_sqrt_alpha slope=" << format_double(result.empirical.slope)
        << " intercept=" << format_double(result.empirical.intercept)
        << " r2=" << format_double(result.empirical.r_squared) << '\n';
    out << "# h_minus1_vs_quarter_alpha slope=" << format_double(result.h_minus1.slope)
        << " intercept=" << format_double(result.h_minus1.intercept)
        << " r2=" << format_double(result.h_minus1.r_squared) << '\n';
    if (result.degenerate) {
        out << "# degenerate: " << result.diagnostic << '\n';
    }
    out << kMetaColumns << ",empirical_error,l2_error,h_minus1_error,residual_n,f_norm\n";
    for (const auto& run : result.runs) {
        write_meta(out, run.report.metadata, std::to_string(run.report.metadata.seed), hash);
        write_errors(out, run.report);
        out << ',' << format_double(run.residual) << ',' << format_double(run.source_norm) << '\n';
    }
}

void write_csv(std::ostream& out, const SelfConsistentResult& result, const ExperimentConfig& config) {
    const std::string hash = config_hash(config);
    write_config_comment(out, config);
    out << "# mean_alpha=" << format_double(result.mean_alpha) << " mean_residual="
        << format_double(result.mean_residual) << " mean_iterations=" << format_double(result.mean_iterations)
        << '\n';
    out << kMetaColumns << ",iter,residual_n,f_norm,next_alpha,stop,empirical_error,l2_error,h_minus1_error\n";
    for (const auto& run : result.runs) {
        if (!run.diagnostic.empty()) {
            out << "# seed " << run.seed << ": " << run.diagnostic << '\n';
        }
        for (std::size_t i = 0; i < run.trace.steps.size(); ++i) {
            const SelectionStep& step = run.trace.steps[i];
            const ErrorReport& report = run.iterations[i];
            write_meta(out, report.metadata, std::to_string(run.seed), hash);
            out << ',' << step.iteration << ',' << format_double(step.residual) << ','
                << format_double(step.source_norm) << ',' << format_double(step.next_alpha) << ','
                << (i + 1 == run.trace.steps.size() ? to_string(run.trace.stop) : std::string("running"));
            write_errors(out, report);
            out << '\n';
        }
    }
}

void write_csv(std::ostream& out, const Snapshot& snapshot, const ExperimentConfig& config) {
    write_snapshot(out, snapshot, config, "reconstruction", "exact");
}

std::vector<std::string> export_results(const HConvergenceResult& result, const ExperimentConfig& config) {
    const auto dir = output_dir(config);
    std::vector<std::string> files{save_config(dir, config)};
    files.push_back(write_file(dir / "rates.csv", [&](std::ostream& out) { write_csv(out, result, config); }));
    files.push_back(write_file(dir / "rates_summary.csv", [&](std::ostream& out) {
        const std::string hash = config_hash(config);
        out << "cells," << kMetaColumns
            << ",empirical_error,l2_error,h_minus1_error,used_empirical,used_h_minus1\n";
        for (std::size_t i = 0; i < result.levels.size(); ++i) {
            const auto& level = result.levels[i];
            out << level.cells << ',';
            write_meta(out, level.mean.metadata, "mean", hash);
            write_errors(out, level.mean);
            out << ',' << result.empirical.used[i] << ',' << result.h_minus1.used[i] << '\n';
        }
    }));
    if (config.plots) {
        plot::Figure figure{"Error against mesh size", "h", "error", true, true, {}};
        figure.series.push_back({"empirical", result.empirical.abscissa, result.empirical.errors});
        figure.series.push_back({"H^-1", result.h_minus1.abscissa, result.h_minus1.errors});
        const auto path = (dir / "rates.svg").string();
        plot::save_svg(path, figure);
        files.push_back(path);
    }
    return files;
}

std::vector<std::string> export_results(const SweepResult& result, const ExperimentConfig& config) {
    const auto dir = output_dir(config);
    std::vector<std::string> files{save_config(dir, config)};
    files.push_back(write_file(dir / "sweep.csv", [&](std::ostream& out) { write_csv(out, result, config); }));
    files.push_back(write_file(dir / "sweep_summary.csv", [&](std::ostream& out) {
        const std::string hash = config_hash(config);
        out << kMetaColumns << ",empirical_error,l2_error,h_minus1_error,residual_n,f_norm,"
            << "argmin_empirical,argmin_h_minus1\n";
        for (std::size_t a = 0; a < result.rows.size(); ++a) {
            const SweepRow& row = result.rows[a];
            ErrorReport::Metadata meta = result.runs[a * static_cast<std::size_t>(config.seeds)].report.metadata;
            write_meta(out, meta, "mean", hash);
            out << ',' << format_double(row.empirical_error) << ',' << format_double(row.l2_error) << ','
                << format_double(row.h_minus1_error) << ',' << format_double(row.residual) << ','
                << format_double(row.source_norm) << ',' << (a == result.argmin_empirical) << ','
                << (a == result.argmin_h_minus1) << '\n';
        }
    }));
    if (config.plots) {
        plot::Figure figure{"Error against alpha", "alpha", "error", true, true, {}};
        plot::Series empirical{"empirical", {}, {}};
        plot::Series h_minus1{"H^-1", {}, {}};
        for (const auto& row : result.rows) {
            empirical.x.push_back(row.alpha);
            empirical.y.push_back(row.empirical_error);
            h_minus1.x.push_back(row.alpha);
            h_minus1.y.push_back(row.h_minus1_error);
        }
        figure.series = {empirical, h_minus1};
        const auto path = (dir / "sweep.svg").string();
        plot::save_svg(path, figure);
        files.push_back(path);
    }
    return files;
}

std::vector<std::string> export_results(const ScalingResult& result, const ExperimentConfig& config) {
    const auto dir = output_dir(config);
    std::vector<std::string> files{save_config(dir, config)};
    files.push_back(write_file(dir / "scaling.csv", [&](std::ostream& out) { write_csv(out, result, config); }));
    files.push_back(write_file(dir / "scaling_summary.csv", [&](std::ostream& out) {
        const std::string hash = config_hash(config);
        out << kMetaColumns << ",sqrt_alpha,quarter_alpha,empirical_error,h_minus1_error,residual_n\n";
        std::size_t offset = 0;
        for (const auto& row : result.rows) {
            write_meta(out, result.runs[offset].report.metadata, "mean", hash);
            out << ',' << format_double(std::sqrt(row.alpha)) << ',' << format_double(std::pow(row.alpha, 0.25))
                << ',' << format_double(row.empirical_error) << ',' << format_double(row.h_minus1_error) << ','
                << format_double(row.residual) << '\n';
            offset += static_cast<std::size_t>(config.seeds);
        }
    }));
    if (config.plots && !result.rows.empty()) {
        auto line = [](const LinearFit& fit, const std::vector<double>& x) {
            plot::Series s{"least squares", {}, {}, true, false};
            const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
            s.x = {*lo, *hi};
            s.y = {fit.slope * *lo + fit.intercept, fit.slope * *hi + fit.intercept};
            return s;
        };
        plot::Series empirical{"empirical", {}, {}, false, true};
        plot::Series h_minus1{"H^-1", {}, {}, false, true};
        for (const auto& row : result.rows) {
            empirical.x.push_back(std::sqrt(row.alpha));
            empirical.y.push_back(row.empirical_error);
            h_minus1.x.push_back(std::pow(row.alpha, 0.25));
            h_minus1.y.push_back(row.h_minus1_error);
        }
        const auto first = (dir / "scaling_empirical.svg").string();
        plot::save_svg(first, {"Empirical error against alpha^(1/2)", "alpha^(1/2)", "error", false, false,
                               {empirical, line(result.empirical, empirical.x)}});
        const auto second = (dir / "scaling_h_minus1.svg").string();
        plot::save_svg(second, {"H^-1 error against alpha^(1/4)", "alpha^(1/4)", "error", false, false,
                                {h_minus1, line(result.h_minus1, h_minus1.x)}});
        files.push_back(first);
        files.push_back(second);
    }
    return files;
}

namespace {

void save_snapshot_plot(const std::filesystem::path& path, const Snapshot& snapshot, const std::string& title,
                        const std::string& first, const std::string& second) {
    plot::Series a{first, {}, {}, true, false};
    plot::Series b{second, {}, {}, true, false};
    for (std::size_t i = 0; i < snapshot.points.size(); ++i) {
        a.x.push_back(snapshot.points[i].x);
        a.y.push_back(snapshot.reconstruction[i]);
        b.x.push_back(snapshot.points[i].x);
        b.y.push_back(snapshot.exact[i]);
    }
    plot::save_svg(path.string(), {title, "x", "value", false, false, {a, b}});
}

}  // namespace

std::vector<std::string> export_results(const SelfConsistentResult& result, const ExperimentConfig& config) {
    const auto dir = output_dir(config);
    std::vector<std::string> files{save_config(dir, config)};
    files.push_back(write_file(dir / "select_trace.csv", [&](std::ostream& out) { write_csv(out, result, config); }));
    if (!result.snapshot.points.empty()) {
        files.push_back(write_file(dir / "select_reconstruction.csv",
                                   [&](std::ostream& out) { write_csv(out, result.snapshot, config); }));
    }
    if (config.plots && !result.runs.empty() && !result.runs.front().trace.steps.empty()) {
        const auto& run = result.runs.front();
        plot::Series alpha{"alpha", {}, {}};
        plot::Series empirical{"empirical", {}, {}};
        plot::Series h_minus1{"H^-1", {}, {}};
        for (std::size_t i = 0; i < run.trace.steps.size(); ++i) {
            const double it = run.trace.steps[i].iteration;
            alpha.x.push_back(it);
            alpha.y.push_back(run.trace.steps[i].alpha);
            empirical.x.push_back(it);
            empirical.y.push_back(run.iterations[i].empirical_error);
            h_minus1.x.push_back(it);
            h_minus1.y.push_back(run.iterations[i].h_minus1_error);
        }
        const auto a = (dir / "select_alpha.svg").string();
        plot::save_svg(a, {"Parameter iterates", "iteration", "alpha", false, true, {alpha}});
        const auto e = (dir / "select_errors.svg").string();
        plot::save_svg(e, {"Errors across iterations", "iteration", "error", false, true, {empirical, h_minus1}});
        files.push_back(a);
        files.push_back(e);
        if (result.snapshot.dimension == 1) {
            const auto path = dir / "select_reconstruction.svg";
            save_snapshot_plot(path, result.snapshot, "Reconstruction", "f_h", "f*");
            files.push_back(path.string());
        }
    }
    return files;
}

std::vector<std::string> export_results(const ForwardResult& result, const ExperimentConfig& config) {
    const auto dir = output_dir(config);
    std::vector<std::string> files{save_config(dir, config)};
    files.push_back(write_file(dir / "forward.csv", [&](std::ostream& out) {
        out << "# max_error=" << format_double(result.max_error)
            << " relative_max_error=" << format_double(result.relative_max_error)
            << " oracle_tail=" << format_double(result.oracle_tail) << '\n';
        write_snapshot(out, result.field, config, "fem", "oracle");
    }));
    files.push_back(write_file(dir / "measurements.csv",
                               [&](std::ostream& out) { waveinv::write_csv(out, result.measurements); }));
    if (config.plots && result.field.dimension == 1) {
        const auto path = dir / "forward.svg";
        save_snapshot_plot(path, result.field, "Final-time field", "FEM", "series");
        files.push_back(path.string());
    }
    return files;
}

std::vector<std::string> export_results(const ReconstructionReport& result, const ExperimentConfig& config) {
    const auto dir = output_dir(config);
    std::vector<std::string> files{save_config(dir, config)};
    files.push_back(write_file(dir / "reconstruction.csv", [&](std::ostream& out) {
        const ErrorReport& r = result.record.report;
        out << "# alpha=" << format_double(result.alpha) << " residual_n=" << format_double(result.record.residual)
            << " f_norm=" << format_double(result.record.source_norm)
            << " empirical_error=" << format_double(r.empirical_error) << " l2_error=" << format_double(r.l2_error)
            << " h_minus1_error=" << format_double(r.h_minus1_error) << '\n';
        write_csv(out, result.snapshot, config);
    }));
    if (result.trace) {
        files.push_back(write_file(dir / "reconstruct_trace.csv", [&](std::ostream& out) {
            const std::string hash = config_hash(config);
            write_config_comment(out, config);
            out << "# stop=" << to_string(result.trace->stop) << '\n';
            out << kMetaColumns << ",iter,residual_n,f_norm,next_alpha\n";
            ErrorReport::Metadata meta = result.record.report.metadata;
            for (const SelectionStep& step : result.trace->steps) {
                meta.alpha = step.alpha;
                write_meta(out, meta, std::to_string(meta.seed), hash);
                out << ',' << step.iteration << ',' << format_double(step.residual) << ','
                    << format_double(step.source_norm) << ',' << format_double(step.next_alpha) << '\n';
            }
        }));
    }
    if (config.plots && result.snapshot.dimension == 1) {
        const auto path = dir / "reconstruction.svg";
        save_snapshot_plot(path, result.snapshot, "Reconstruction", "f_h", "f*");
        files.push_back(path.string());
    }
    return files;
}

}  // namespace waveinv::experiments
