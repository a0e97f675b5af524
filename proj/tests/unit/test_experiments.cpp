#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "waveinv/errors.hpp"
#include "waveinv/experiments.hpp"

using namespace waveinv;
using namespace waveinv::experiments;

namespace {

ExperimentConfig small_1d() {
    ExperimentConfig c;
    c.cells = {24};
    c.steps = 24;
    c.sensors = {50};
    c.seeds = 2;
    c.oracle_modes = 120;
    return c;
}

std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> lines;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() != '#') {
            lines.push_back(line);
        }
    }
    return lines;
}

}  // namespace

TEST(Config, TextRoundTrip) {
    ExperimentConfig c;
    c.dimension = 2;
    c.source = "expr:sin(pi*x)*sin(pi*y)";
    c.cells = {5, 9, 17};
    c.sensors = {100, 400};
    c.sigma_from_rule = true;
    c.alphas = {1e-3, 1e-5};
    c.source_norm = 0.25;
    c.layout = SensorLayout::jittered_grid;
    c.noise_distribution = NoiseDistribution::rademacher;
    c.alpha_policy = AlphaPolicy::rule;
    c.output = "out/dir";
    std::istringstream in(to_text(c));
    const ExperimentConfig back = read_config(in);
    EXPECT_EQ(to_text(back), to_text(c));
    EXPECT_EQ(back.cells, c.cells);
    EXPECT_TRUE(back.sigma_from_rule);
    EXPECT_EQ(back.source_norm, c.source_norm);
    EXPECT_EQ(back.output, "out/dir");
}

TEST(Config, ParsingDetails) {
    std::istringstream in(
        "# comment line\n"
        "cells = 2, 4 8   # trailing comment\n"
        "sensors = 9e4\n"
        "steps = auto\n"
        "sigma = rule\n"
        "plots = false\n"
        "\n");
    const ExperimentConfig c = read_config(in);
    EXPECT_EQ(c.cells, (std::vector<int>{2, 4, 8}));
    EXPECT_EQ(c.sensors, (std::vector<int>{90000}));
    EXPECT_EQ(c.steps, 0);
    EXPECT_TRUE(c.sigma_from_rule);
    EXPECT_FALSE(c.plots);
}

TEST(Config, Errors) {
    ExperimentConfig c;
    EXPECT_THROW(apply_setting(c, "no_such_key", "1"), ConfigError);
    EXPECT_THROW(apply_setting(c, "dimension", "one"), ConfigError);
    EXPECT_THROW(apply_setting(c, "sensors", "2.5"), ConfigError);
    EXPECT_THROW(apply_setting(c, "plots", "maybe"), ConfigError);
    EXPECT_THROW(apply_setting(c, "alpha_policy", "best"), ConfigError);
    std::istringstream missing_equals("cells 4\n");
    EXPECT_THROW(read_config(missing_equals), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, HashIgnoresPresentationOnly) {
    ExperimentConfig a;
    ExperimentConfig b = a;
    b.output = "elsewhere";
    b.threads = 4;
    b.plots = false;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.sigma = 0.01;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, ValidationAndCaps) {
    EXPECT_NO_THROW(validate(ExperimentConfig{}));
    auto rejects = [](auto mutate) {
        ExperimentConfig c;
        mutate(c);
        EXPECT_THROW(validate(c), ConfigError) << to_text(c);
    };
    rejects([](ExperimentConfig& c) { c.dimension = 3; });
    rejects([](ExperimentConfig& c) { c.dimension = 2; });  // quarter_power source in 2D
    rejects([](ExperimentConfig& c) { c.profile = "power:3"; });
    rejects([](ExperimentConfig& c) { c.profile = "expr:sin(t)"; });
    rejects([](ExperimentConfig& c) { c.source = "expr:x +"; });
    rejects([](ExperimentConfig& c) { c.cells = {1}; });
    rejects([](ExperimentConfig& c) { c.cells = {1002}; });
    rejects([](ExperimentConfig& c) { c.sensors = {90001}; });
    rejects([](ExperimentConfig& c) { c.sigma = -0.1; });
    rejects([](ExperimentConfig& c) { c.seeds = 0; });
    rejects([](ExperimentConfig& c) { c.alpha = 0; });
    rejects([](ExperimentConfig& c) { c.alphas = {1e-3, 1e-2, 1e-4}; });
    rejects([](ExperimentConfig& c) { c.alphas = {1e-3, 1e-3}; });
    rejects([](ExperimentConfig& c) {
        c.dimension = 2;
        c.source = "two_bumps";
        c.cells = {11};
        c.sensors = {50};
    });
    ExperimentConfig large;
    large.cells = {1002};
    large.allow_large = true;
    EXPECT_NO_THROW(validate(large));
}

TEST(Sources, BuiltinsAndModes) {
    const SpatialFunction quarter = make_source("quarter_power", 1);
    EXPECT_NEAR(quarter({0.5, 0}), std::pow(0.25, 0.25), 1e-15);
    EXPECT_EQ(quarter({0.0, 0}), 0.0);
    const SpatialFunction mode = make_source("mode:2,3", 2);
    EXPECT_NEAR(mode({0.25, 0.5}), 2 * std::sin(M_PI / 2) * std::sin(1.5 * M_PI), 1e-15);
    EXPECT_THROW(make_source("mode:2", 2), ConfigError);
    EXPECT_THROW(make_source("mode:0", 1), ConfigError);
    EXPECT_THROW(make_source("two_bumps", 1), ConfigError);
    EXPECT_THROW(make_source("nothing", 1), ConfigError);
    // two bumps of radius 1/4 centred on the diagonal, zero elsewhere
    const SpatialFunction standin = make_source("two_bumps", 2);
    EXPECT_GT(standin({0.32, 0.32}), 0.0);
    EXPECT_EQ(standin({0.9, 0.1}), 0.0);
    EXPECT_NEAR(standin({0.32, 0.32}), standin({0.68, 0.68}), 1e-15);
}

TEST(Sources, StandinHasTheDocumentedNorm) {
    // independent midpoint rule on a 2000 x 2000 grid
    const SpatialFunction standin = make_source("two_bumps", 2);
    const int m = 2000;
    double sum = 0;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const double v = standin({(i + 0.5) / m, (j + 0.5) / m});
            sum += v * v;
        }
    }
    EXPECT_NEAR(std::sqrt(sum / (m * m)), kStandinNorm, 1e-4);
}

TEST(Profiles, Builtins) {
    EXPECT_TRUE(make_profile("t4").compatible());
    EXPECT_EQ(make_profile("power:5").power_exponent(), 5);
    EXPECT_TRUE(make_profile("expr:t^4*exp(-t)").compatible());
    EXPECT_FALSE(make_profile("expr:t^2").compatible());
    EXPECT_THROW(make_profile("power:-1"), ConfigError);
    EXPECT_THROW(make_profile("sin"), ConfigError);
}

TEST(Fits, LineAndRate) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const LinearFit line = fit_line(x, y);
    EXPECT_NEAR(line.slope, 2, 1e-14);
    EXPECT_NEAR(line.intercept, 1, 1e-14);
    EXPECT_NEAR(line.r_squared, 1, 1e-14);
    EXPECT_THROW(fit_line(std::vector<double>{1}, std::vector<double>{1}), InsufficientDataError);
    EXPECT_THROW(fit_line(std::vector<double>{1, 1}, std::vector<double>{1, 2}), InsufficientDataError);

    const std::vector<double> h{0.5, 0.25, 0.125, 0.0625, 0.03125};
    std::vector<double> e;
    for (double v : h) {
        e.push_back(3 * v * v);
    }
    const RateFit clean = fit_rate(h, e);
    EXPECT_NEAR(clean.slope, 2, 1e-12);
    EXPECT_EQ(std::count(clean.used.begin(), clean.used.end(), true), 5);
}

TEST(Fits, PlateauLevelsAreExcluded) {
    const std::vector<double> h{0.5, 0.25, 0.125, 0.0625, 0.03125};
    const std::vector<double> e{0.4, 0.1, 0.025, 0.02, 0.019};
    const RateFit fit = fit_rate(h, e);
    EXPECT_EQ(fit.used, (std::vector<bool>{true, true, true, false, false}));
    EXPECT_NEAR(fit.slope, 2, 1e-12);
    const RateFit all = fit_rate(h, e, false);
    EXPECT_LT(all.slope, 1.5);
    const std::vector<double> flat{0.1, 0.09, 0.089, 0.088, 0.088};
    EXPECT_THROW(fit_rate(h, flat), InsufficientDataError);
    EXPECT_THROW(fit_rate(std::vector<double>{0.5}, std::vector<double>{0.1}), InsufficientDataError);
    EXPECT_THROW(fit_rate(std::vector<double>{0.25, 0.5, 0.125}, std::vector<double>{1, 1, 1}), InvalidArgument);
}

TEST(Runs, HConvergenceNeedsThreeLevels) {
    ExperimentConfig c = small_1d();
    c.cells = {8, 16};
    EXPECT_THROW(run_h_convergence(c), InsufficientDataError);
}

TEST(Runs, HConvergenceSortsLevelsAndRecordsMetadata) {
    ExperimentConfig c = small_1d();
    c.cells = {8, 2, 4};
    c.steps = 0;
    c.sigma = 0.001;
    const HConvergenceResult r = run_h_convergence(c);
    ASSERT_EQ(r.levels.size(), 3u);
    EXPECT_EQ(r.levels[0].cells, 2);
    EXPECT_EQ(r.levels[2].cells, 8);
    for (const auto& level : r.levels) {
        ASSERT_EQ(level.runs.size(), 2u);
        EXPECT_NEAR(level.mean.metadata.h, 1.0 / level.cells, 1e-15);
        EXPECT_NEAR(level.mean.metadata.tau, 1.0 / level.cells, 1e-15);
        EXPECT_EQ(level.mean.metadata.n, 50);
    }
    EXPECT_EQ(r.levels[0].runs[0].report.metadata.seed, 1u);
    EXPECT_EQ(r.levels[0].runs[1].report.metadata.seed, 2u);
}

TEST(Runs, SweepIsReproducibleAndThreadInvariant) {
    ExperimentConfig c = small_1d();
    c.alpha_policy = AlphaPolicy::sweep;
    c.alphas = {1e-3, 1e-5, 1e-7};
    const SweepResult a = run_alpha_sweep(c);
    c.threads = 3;
    const SweepResult b = run_alpha_sweep(c);
    ASSERT_EQ(a.runs.size(), 6u);
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        EXPECT_EQ(a.runs[i].report.empirical_error, b.runs[i].report.empirical_error);
        EXPECT_EQ(a.runs[i].report.h_minus1_error, b.runs[i].report.h_minus1_error);
    }
    ASSERT_TRUE(a.rule_alpha.has_value());
    EXPECT_LT(a.argmin_empirical, 3u);
    // residual grows with alpha along the sweep
    EXPECT_GT(a.rows[0].residual, a.rows[2].residual);
}

TEST(Runs, ScalingRejectsAlphaBelowTheFloor) {
    ExperimentConfig c = small_1d();
    c.sensors = {100, 400, 1600};
    c.sigma = 1e-9;
    EXPECT_THROW(run_scaling_study(c), ConfigError);
    c.sensors = {100, 400};
    EXPECT_THROW(run_scaling_study(c), InsufficientDataError);
}

TEST(Runs, NoiselessScalingAndSelectionAreFlagged) {
    ExperimentConfig c = small_1d();
    c.sensors = {100, 400, 1600};
    c.sigma = 0.0;
    const ScalingResult scaling = run_scaling_study(c);
    EXPECT_TRUE(scaling.degenerate);
    EXPECT_FALSE(scaling.diagnostic.empty());
    c.sensors = {100};
    c.seeds = 1;
    const SelfConsistentResult selection = run_self_consistent(c);
    EXPECT_TRUE(selection.degenerate);
}

TEST(Runs, ForwardMatchesTheSeriesOnAModalSource) {
    ExperimentConfig c = small_1d();
    c.source = "mode:1";
    c.cells = {64};
    c.steps = 64;
    c.seeds = 1;
    const ForwardResult r = run_forward(c);
    EXPECT_LT(r.relative_max_error, 2e-3);
    EXPECT_EQ(r.measurements.size(), 50u);
    EXPECT_EQ(r.field.points.size(), 65u);  // boundary vertices included
}

TEST(Runs, ReconstructionFromAMeasurementFile) {
    ExperimentConfig c = small_1d();
    c.seeds = 1;
    const ForwardResult forward = run_forward(c);
    const auto path = std::filesystem::temp_directory_path() / "waveinv_measurements_test.csv";
    {
        std::ofstream out(path);
        write_csv(out, forward.measurements);
    }
    c.data = path.string();
    c.alpha_policy = AlphaPolicy::rule;
    const ReconstructionReport from_file = run_reconstruction(c);
    c.data.clear();
    const ReconstructionReport synthetic = run_reconstruction(c);
    EXPECT_NEAR(from_file.alpha, synthetic.alpha, 1e-15);
    EXPECT_NEAR(from_file.record.residual, synthetic.record.residual, 1e-12);
    std::filesystem::remove(path);
    c.alpha_policy = AlphaPolicy::sweep;
    EXPECT_THROW(run_reconstruction(c), ConfigError);
}

TEST(Export, CsvRowsCarryMetadata) {
    ExperimentConfig c = small_1d();
    c.alpha_policy = AlphaPolicy::sweep;
    c.alphas = {1e-4, 1e-6};
    const SweepResult r = run_alpha_sweep(c);
    std::ostringstream out;
    write_csv(out, r, c);
    const auto lines = data_lines(out.str());
    ASSERT_EQ(lines.size(), 1u + 4u);
    EXPECT_EQ(lines[0].rfind("h,tau,n,sigma,alpha,seed,config_hash", 0), 0u);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        EXPECT_NE(lines[i].find(config_hash(c)), std::string::npos);
    }
}

TEST(Export, WritesFilesIntoTheOutputDirectory) {
    ExperimentConfig c = small_1d();
    const auto dir = std::filesystem::temp_directory_path() / "waveinv_export_test";
    std::filesystem::remove_all(dir);
    c.output = dir.string();
    c.seeds = 1;
    c.sensors = {60};
    const auto files = export_results(run_self_consistent(c), c);
    for (const auto& f : files) {
        EXPECT_TRUE(std::filesystem::exists(f)) << f;
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "config.txt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "select_trace.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "select_alpha.svg"));
    std::filesystem::remove_all(dir);
}
