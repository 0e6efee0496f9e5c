#include "pf/energy.hpp"
#include "pf/pde.hpp"
#include "pf/shapes.hpp"
#include "pf/varifold.hpp"

#include <benchmark/benchmark.h>

using namespace pf;

namespace {

ScalarField2D circle_field(int n, double eps) {
    Grid2D g = make_grid(n, n, Rect{-1, 1, -1, 1}, BoundaryKind::Neumann);
    return recovery_field(Circle{{0, 0}, 0.5}, eps, g).u;
}

void BM_Gradient(benchmark::State& state) {
    ScalarField2D u = circle_field(static_cast<int>(state.range(0)), 0.05);
    for (auto _ : state) benchmark::DoNotOptimize(gradient(u));
    state.SetItemsProcessed(state.iterations() * u.grid.count());
}
BENCHMARK(BM_Gradient)->Arg(257)->Arg(513);

void BM_EvaluateEnergies(benchmark::State& state) {
    ScalarField2D u = circle_field(static_cast<int>(state.range(0)), 0.05);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_energies(u, 0.05));
    state.SetItemsProcessed(state.iterations() * u.grid.count());
}
BENCHMARK(BM_EvaluateEnergies)->Arg(257)->Arg(513);

void BM_DiffuseVarifold(benchmark::State& state) {
    ScalarField2D u = circle_field(static_cast<int>(state.range(0)), 0.05);
    for (auto _ : state) benchmark::DoNotOptimize(diffuse_varifold(u, 0.05));
    state.SetItemsProcessed(state.iterations() * u.grid.count());
}
BENCHMARK(BM_DiffuseVarifold)->Arg(257)->Arg(513);

void BM_FlowSteps(benchmark::State& state) {
    ScalarField2D u = circle_field(257, 0.05);
    double dt = flow_dt_bound(u.grid, 0.05);
    for (auto _ : state) {
        auto [uf, rep] = allen_cahn_flow(u, 0.05, dt, 10);
        benchmark::DoNotOptimize(uf);
    }
    state.SetItemsProcessed(state.iterations() * 10 * u.grid.count());
}
BENCHMARK(BM_FlowSteps);

void BM_MarchingSquares(benchmark::State& state) {
    ScalarField2D u = circle_field(static_cast<int>(state.range(0)), 0.05);
    for (auto _ : state) benchmark::DoNotOptimize(extract_level_set(u, 0.0));
}
BENCHMARK(BM_MarchingSquares)->Arg(257)->Arg(513);

void BM_ElasticaEnergy(benchmark::State& state) {
    PolylineVarifold pv;
    pv.curves.push_back(circle_polyline({0, 0}, 0.5, static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(elastica_energy(pv));
}
BENCHMARK(BM_ElasticaEnergy)->Arg(1024)->Arg(8192);

void BM_EDescentStep(benchmark::State& state) {
    ScalarField2D u = circle_field(129, 0.08);
    double dt = flow_dt_bound(u.grid, 0.08);
    for (auto _ : state) {
        auto [uf, rep] = e_eps_descent(u, 0.08, dt, 1);
        benchmark::DoNotOptimize(uf);
    }
}
BENCHMARK(BM_EDescentStep);

} // namespace

BENCHMARK_MAIN();
