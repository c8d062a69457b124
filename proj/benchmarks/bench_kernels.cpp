#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "wglab/norms.hpp"
#include "wglab/numerics.hpp"
#include "wglab/vector_fields.hpp"
#include "wglab/waveguide.hpp"

using namespace wglab;

namespace {

ModeBasis basis(int res, int j) {
  CrossSectionSpec s;
  s.bc = BoundaryCondition::Neumann;
  s.resolution = res;
  return build_mode_basis(s, j);
}

DataProfile mixed() {
  DataProfile p;
  p.f = [](double r, std::span<const double> y) {
    return polynomial_bump(r, 1.0, 8) * (1.0 + std::cos(y[0]) + 0.5 * std::cos(2.0 * y[0]));
  };
  return p;
}

}  // namespace

static void BM_ModeTransform(benchmark::State& state) {
  const auto b = basis(static_cast<int>(state.range(0)), 8);
  const int cols = 400;
  std::vector<double> phys(static_cast<std::size_t>(b.points() * cols), 1.0);
  std::vector<double> modes(static_cast<std::size_t>(b.size() * cols));
  for (auto _ : state) {
    b.analyze(phys, modes, cols);
    b.synthesize(modes, phys, cols);
    benchmark::DoNotOptimize(phys.data());
  }
  state.SetItemsProcessed(state.iterations() * cols);
}
BENCHMARK(BM_ModeTransform)->Arg(32)->Arg(128);

static void BM_RadialLeapfrog(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto grid = RadialGrid::for_horizon(n, 1.0, 20.0, 0.025);
  KGState s;
  s.mu = 1.0;
  for (int i = 0; i < grid.size(); ++i) {
    s.u.push_back(0.0);
    s.ut.push_back(polynomial_bump(grid.r(i), 1.0, 8));
  }
  EvolveOptions o;
  o.dt = 0.0125;
  o.t_final = 20.0;
  for (auto _ : state) benchmark::DoNotOptimize(evolve_kg(grid, s, o).states.back().u.data());
  state.SetItemsProcessed(state.iterations() * 1600);
}
BENCHMARK(BM_RadialLeapfrog)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_ModewiseLinear(benchmark::State& state) {
  const auto b = basis(32, 8);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 10.0, 0.05);
  const auto data = sample_data(mixed(), grid, b, 1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_linear_modewise(data, 0.0, b, {0.025, 10.0, 1.0}));
}
BENCHMARK(BM_ModewiseLinear)->Unit(benchmark::kMillisecond);

static void BM_NonlinearGradsq(benchmark::State& state) {
  const auto b = basis(8, 4);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 5.0, 0.025);
  const auto data = sample_data(mixed(), grid, b, 1.0, 0.1);
  NonlinearOptions no;
  no.dt = 0.0125;
  no.t_final = 5.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_nonlinear(data, QuadraticForm::gradsq(3, 1), b, 0.0, no));
}
BENCHMARK(BM_NonlinearGradsq)->Unit(benchmark::kMillisecond);

static void BM_GammaNorm(benchmark::State& state) {
  const auto b = basis(16, 4);
  const auto grid = RadialGrid::for_horizon(3, 1.0, 10.0, 0.05);
  const auto traj = solve_linear_modewise(sample_data(mixed(), grid, b, 1.0, 1.0), 0.0, b, {0.025, 10.0, 0.25});
  const GammaBudget budget;
  for (auto _ : state) benchmark::DoNotOptimize(gamma_norm(traj, 10.0, budget));
}
BENCHMARK(BM_GammaNorm)->Unit(benchmark::kMillisecond);

static void BM_CommutatorResidual(benchmark::State& state) {
  const auto s = SpacetimeSample::centred(true, 3, 1, 0.2, 6, [](std::span<const double> p) {
    double q = 0.0;
    for (double v : p) q += v * v;
    return std::exp(-q);
  });
  const auto fields = commuting_fields(3, 1);
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& id : fields) acc += commutator_residual(id, 1.0, s);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_CommutatorResidual)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
