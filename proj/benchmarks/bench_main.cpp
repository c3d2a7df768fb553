#include <benchmark/benchmark.h>

#include "subflow/flow.hpp"
#include "subflow/heatkernel.hpp"
#include "subflow/scenario.hpp"

using namespace subflow;

namespace {

RunConfig config(const char *preset, int n) {
  RunConfig c = preset_config(preset);
  c.grid = Grid(n, n, 2 * n);
  return c;
}

} // namespace

static void BM_AssembleDiscretization(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(Discretization(GroupModel::heisenberg(), Grid(n, n, 2 * n)));
  state.SetComplexityN(static_cast<long>(n) * n * 2 * n);
}
BENCHMARK(BM_AssembleDiscretization)->Arg(6)->Arg(12)->Arg(24)->Complexity();

static void BM_SubLaplacianApply(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const Discretization disc(GroupModel::heisenberg(), Grid(n, n, 2 * n));
  const ScalarField f = disc.sample([](const Eigen::Vector3d &p) { return p[0] * p[1] + p[2]; });
  for (auto _ : state)
    benchmark::DoNotOptimize(disc.apply_sub_laplacian(f));
}
BENCHMARK(BM_SubLaplacianApply)->Arg(12)->Arg(24);

static void BM_Evaluate(benchmark::State &state, const char *preset) {
  const Problem pb = build_problem(config(preset, 12));
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate(pb.disc, *pb.target, *pb.potential, pb.initial));
}
BENCHMARK_CAPTURE(BM_Evaluate, torus, "torus-eells-sampson");
BENCHMARK_CAPTURE(BM_Evaluate, sphere, "sphere-projected");
BENCHMARK_CAPTURE(BM_Evaluate, hyperbolic, "hyperbolic-decay");

static void BM_FlowStep(benchmark::State &state) {
  const RunConfig c = config("sphere-projected", 12);
  const Problem pb = build_problem(c);
  MapState u = pb.initial;
  for (auto _ : state)
    u = step(pb.disc, u, c.flow, *pb.target, *pb.potential);
}
BENCHMARK(BM_FlowStep);

static void BM_SpectralDecompose(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const Discretization disc(GroupModel::heisenberg(), Grid(n, n, n));
  for (auto _ : state)
    benchmark::DoNotOptimize(spectral_decompose(disc));
}
BENCHMARK(BM_SpectralDecompose)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_Picard(benchmark::State &state) {
  const Problem pb = build_problem(config("sphere-projected", 4));
  const auto spec = spectral_decompose(pb.disc);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        picard_run(pb.disc, spec, pb.initial, *pb.target, *pb.potential, 0.005, 8, 4));
}
BENCHMARK(BM_Picard)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
