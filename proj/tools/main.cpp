// waveinv: command line front end for the experiment harness.
//
// Settings are resolved in three layers: the subcommand preset (which
// reproduces the reference setups), then --config, then individual flags.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "waveinv/errors.hpp"
#include "waveinv/experiments.hpp"

namespace {

namespace ex = waveinv::experiments;

enum ExitCode { ok = 0, failure = 1, config_error = 2, numerical_error = 3, insufficient_data = 4 };

ex::ExperimentConfig preset(const std::string& command) {
    ex::ExperimentConfig c;
    c.output = "results/" + command;
    if (command == "rates") {
        c.cells = {2, 4, 8, 16, 32};
        c.steps = 0;
        c.sensors = {1000};
        c.sigma_from_rule = true;
        c.alpha = 1e-6;
    } else if (command == "select") {
        c.sensors = {1000};
        c.alpha_policy = ex::AlphaPolicy::self_consistent;
    } else if (command == "scaling") {
        c.dimension = 2;
        c.source = "two_bumps";
        c.cells = {31};
        c.sensors = {2500, 10000, 40000, 90000};
        c.sigma = 0.004;
        c.seeds = 5;
        c.alpha_policy = ex::AlphaPolicy::rule;
    } else if (command == "sweep") {
        c.alpha_policy = ex::AlphaPolicy::sweep;
    } else if (command == "forward") {
        c.seeds = 1;
    } else if (command == "reconstruct") {
        c.seeds = 1;
        c.alpha_policy = ex::AlphaPolicy::rule;
    }
    return c;
}

void print_files(const std::vector<std::string>& files) {
    for (const auto& f : files) {
        std::printf("  wrote %s\n", f.c_str());
    }
}

int run(const std::string& command, const ex::ExperimentConfig& config) {
    auto finish = [&](const auto& result) {
        if (!config.output.empty()) {
            print_files(ex::export_results(result, config));
        }
    };
    if (command == "forward") {
        const auto r = ex::run_forward(config);
        std::printf("max |u_h - u| = %.6e  relative %.6e  (series tail <= %.2e)\n", r.max_error,
                    r.relative_max_error, r.oracle_tail);
        finish(r);
    } else if (command == "reconstruct") {
        const auto r = ex::run_reconstruction(config);
        std::printf("alpha %.6e  residual %.6e  ||f_h|| %.6e\n", r.alpha, r.record.residual, r.record.source_norm);
        std::printf("errors: empirical %.6e  L2 %.6e  H^-1 %.6e\n", r.record.report.empirical_error,
                    r.record.report.l2_error, r.record.report.h_minus1_error);
        finish(r);
    } else if (command == "sweep") {
        const auto r = ex::run_alpha_sweep(config);
        std::printf("%-12s %-14s %-14s %-14s\n", "alpha", "empirical", "H^-1", "residual");
        for (const auto& row : r.rows) {
            std::printf("%-12.4e %-14.6e %-14.6e %-14.6e\n", row.alpha, row.empirical_error, row.h_minus1_error,
                        row.residual);
        }
        std::printf("argmin: empirical %.4e  H^-1 %.4e", r.rows[r.argmin_empirical].alpha,
                    r.rows[r.argmin_h_minus1].alpha);
        if (r.rule_alpha) {
            std::printf("  rule %.4e", *r.rule_alpha);
        }
        std::printf("\n");
        finish(r);
    } else if (command == "rates") {
        const auto r = ex::run_h_convergence(config);
        std::printf("%-8s %-12s %-14s %-14s\n", "cells", "h", "empirical", "H^-1");
        for (std::size_t i = 0; i < r.levels.size(); ++i) {
            const auto& l = r.levels[i];
            std::printf("%-8d %-12.4e %-14.6e%s %-14.6e%s\n", l.cells, l.mean.metadata.h, l.mean.empirical_error,
                        r.empirical.used[i] ? " " : "*", l.mean.h_minus1_error, r.h_minus1.used[i] ? " " : "*");
        }
        std::printf("slopes: empirical %.3f (R^2 %.3f)  H^-1 %.3f (R^2 %.3f)   * = plateau, not fitted\n",
                    r.empirical.slope, r.empirical.r_squared, r.h_minus1.slope, r.h_minus1.r_squared);
        finish(r);
    } else if (command == "select") {
        const auto r = ex::run_self_consistent(config);
        for (const auto& run : r.runs) {
            std::printf("seed %llu: alpha %.6e  residual %.6e  iterations %zu  %s%s%s\n",
                        static_cast<unsigned long long>(run.seed), run.trace.final_alpha, run.final.residual,
                        run.trace.steps.size(), waveinv::to_string(run.trace.stop).c_str(),
                        run.diagnostic.empty() ? "" : "  ", run.diagnostic.c_str());
        }
        std::printf("mean: alpha %.6e  residual %.6e  iterations %.2f%s\n", r.mean_alpha, r.mean_residual,
                    r.mean_iterations, r.degenerate ? "  (degenerate)" : "");
        finish(r);
    } else if (command == "scaling") {
        const auto r = ex::run_scaling_study(config);
        std::printf("%-8s %-12s %-14s %-14s\n", "n", "alpha", "empirical", "H^-1");
        for (const auto& row : r.rows) {
            std::printf("%-8d %-12.4e %-14.6e %-14.6e\n", row.n, row.alpha, row.empirical_error, row.h_minus1_error);
        }
        std::printf("empirical ~ alpha^1/2: slope %.4f  intercept %.3e  R^2 %.4f\n", r.empirical.slope,
                    r.empirical.intercept, r.empirical.r_squared);
        std::printf("H^-1 ~ alpha^1/4:      slope %.4f  intercept %.3e  R^2 %.4f\n", r.h_minus1.slope,
                    r.h_minus1.intercept, r.h_minus1.r_squared);
        if (r.degenerate) {
            std::printf("degenerate: %s\n", r.diagnostic.c_str());
        }
        finish(r);
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inverse source problem for the wave equation: forward solves, Tikhonov reconstruction, "
                 "parameter selection and convergence studies"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_file;
    bool print_config = false;
    app.add_option("--config", config_file, "key = value configuration file ('#' starts a comment)");
    app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

    std::map<std::string, std::string> overrides;
    for (const auto& key : ex::config_schema()) {
        app.add_option_function<std::string>(
            std::string("--") + key.name, [&overrides, name = std::string(key.name)](const std::string& v) {
                overrides[name] = v;
            },
            key.help);
    }

    const std::pair<const char*, const char*> commands[] = {
        {"forward", "FEM forward solve against the series solution; writes synthetic measurements"},
        {"reconstruct", "one Tikhonov reconstruction (alpha_policy fixed, rule or self_consistent)"},
        {"sweep", "errors over an alpha grid"},
        {"rates", "h-convergence study at fixed alpha"},
        {"select", "self-consistent parameter iteration"},
        {"scaling", "error against alpha^(1/2) and alpha^(1/4) over sensor counts"},
    };
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        ex::ExperimentConfig config = preset(command);
        if (!config_file.empty()) {
            config = ex::load_config(config_file, config);
        }
        for (const auto& [key, value] : overrides) {
            ex::apply_setting(config, key, value);
        }
        if (print_config) {
            std::cout << ex::to_text(config);
            return ok;
        }
        ex::validate(config);
        std::printf("%s (config %s)\n", command.c_str(), ex::config_hash(config).c_str());
        return run(command, config);
    } catch (const waveinv::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_error;
    } catch (const waveinv::InvalidArgument& e) {
        std::fprintf(stderr, "invalid argument: %s\n", e.what());
        return config_error;
    } catch (const waveinv::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return numerical_error;
    } catch (const waveinv::ContractViolation& e) {
        std::fprintf(stderr, "contract violation: %s\n", e.what());
        return numerical_error;
    } catch (const waveinv::InsufficientDataError& e) {
        std::fprintf(stderr, "insufficient data: %s\n", e.what());
        return insufficient_data;
    } catch (const waveinv::DegenerateDataError& e) {
        std::fprintf(stderr, "degenerate data: %s\n", e.what());
        return insufficient_data;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return failure;
    }
}
