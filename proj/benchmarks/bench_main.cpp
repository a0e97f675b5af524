#include <cmath>

#include <benchmark/benchmark.h>

#include "waveinv/alpha_select.hpp"
#include "waveinv/tikhonov.hpp"

using namespace waveinv;

namespace {

double quarter(const Point& p) { return std::pow(p.x * (1 - p.x), 0.25); }

Mesh mesh_for(int dimension, int cells) { return dimension == 1 ? build_interval_mesh(cells) : build_square_mesh(cells); }

// one forward solve: N steps with a prefactored M + tau^2/4 K
void BM_ForwardSolve(benchmark::State& state) {
    const int dimension = static_cast<int>(state.range(0));
    const int cells = static_cast<int>(state.range(1));
    const Mesh mesh = mesh_for(dimension, cells);
    const FEMatrices fe = assemble(mesh);
    const ForwardSolver solver(fe, make_time_grid(1.0, 200), TemporalProfile::power(4));
    const Vector f = mesh.interpolate(quarter);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solver.final_state(f));
    }
    state.counters["dofs"] = mesh.num_dofs();
}
BENCHMARK(BM_ForwardSolve)->Args({1, 251})->Args({2, 31})->Unit(benchmark::kMillisecond);

void BM_GramAssembly(benchmark::State& state) {
    const int dimension = static_cast<int>(state.range(0));
    const int cells = static_cast<int>(state.range(1));
    const int n = static_cast<int>(state.range(2));
    const Mesh mesh = mesh_for(dimension, cells);
    const FEMatrices fe = assemble(mesh);
    const ForwardSolver solver(fe, make_time_grid(1.0, 200), TemporalProfile::power(4));
    const SensorSet sensors = make_sensors(dimension, n, SensorLayout::uniform_grid);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_forward_gram(solver, mesh, sensors).gram.data());
    }
}
BENCHMARK(BM_GramAssembly)->Args({1, 251, 300})->Args({1, 251, 1000})->Args({2, 21, 2500})->Unit(benchmark::kMillisecond);

struct TikhonovFixture {
    Mesh mesh = build_interval_mesh(251);
    FEMatrices fe = assemble(mesh);
    ForwardSolver solver{fe, make_time_grid(1.0, 200), TemporalProfile::power(4)};
    SensorSet sensors = make_sensors(1, 1000, SensorLayout::uniform_grid);
    ForwardOperatorSample sample = assemble_forward_gram(solver, mesh, sensors);
    std::vector<double> data;

    TikhonovFixture() {
        NoiseSpec noise;
        noise.sigma = 0.009;
        noise.seed = 1;
        data = synthesize(sensors, apply_forward(solver, mesh, mesh.interpolate(quarter), sensors), noise).values;
    }
};

const TikhonovFixture& fixture() {
    static const TikhonovFixture f;
    return f;
}

void BM_TikhonovSolve(benchmark::State& state) {
    const TikhonovFixture& f = fixture();
    const TikhonovProblem problem(f.sample, f.fe.mass, f.data);
    TikhonovOptions options;
    options.method = state.range(0) == 0 ? TikhonovOptions::Method::direct : TikhonovOptions::Method::conjugate_gradient;
    for (auto _ : state) {
        benchmark::DoNotOptimize(problem.solve(4.5e-6, options).residual);
    }
}
BENCHMARK(BM_TikhonovSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SelfConsistent(benchmark::State& state) {
    const TikhonovFixture& f = fixture();
    const TikhonovProblem problem(f.sample, f.fe.mass, f.data);
    for (auto _ : state) {
        benchmark::DoNotOptimize(self_consistent(problem, 1).trace.final_alpha);
    }
}
BENCHMARK(BM_SelfConsistent)->Unit(benchmark::kMillisecond);

void BM_Rule(benchmark::State& state) {
    double sigma = 0.009;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rule_alpha(sigma, 1000, 1, 0.6267));
    }
}
BENCHMARK(BM_Rule);

}  // namespace
BENCHMARK_MAIN();
