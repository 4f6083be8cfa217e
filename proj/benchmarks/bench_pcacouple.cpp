#include <benchmark/benchmark.h>

#include "pcacouple/coupling.hpp"
#include "pcacouple/exact_kernel.hpp"
#include "pcacouple/monotonicity.hpp"
#include "pcacouple/uniform_stream.hpp"

using namespace pcacouple;

namespace {

std::shared_ptr<const Dynamics> ising(double beta, int dim) {
  return std::make_shared<const Dynamics>(
      Dynamics::homogeneous(std::make_shared<const LocalRule>(ising_rule_nearest(beta, 0.0, 1.0, dim))));
}

}  // namespace

static void BM_Philox(benchmark::State& state) {
  const UniformStream s(7);
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(s.draw(3, k++));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Philox);

static void BM_LevyInverse(benchmark::State& state) {
  const auto chain = spaces::q_chain(static_cast<int>(state.range(0)));
  const auto ctx = OrderContext::make(chain, OrderMode::Total);
  std::vector<double> p(chain.size(), 1.0 / static_cast<double>(chain.size()));
  const auto table = distribution_of<double>(std::span<const double>(p), ctx);
  const UniformStream s(1);
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(levy_inverse(table, s.draw(0, k++)));
}
BENCHMARK(BM_LevyInverse)->Arg(2)->Arg(8)->Arg(32);

static void BM_CoupledStep(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto threads = static_cast<unsigned>(state.range(1));
  const Volume vol = Volume::torus(2, {side, side});
  const auto d = ising(0.4, 2);
  CouplingOptions opt;
  opt.threads = threads;
  const ComponentSpec c{d, BoundaryCondition::constant(0), std::nullopt};
  const CoupledDynamics sys(vol, {c, c}, opt);
  auto st = sys.initial_state({constant_config(vol, 0), constant_config(vol, 1)});
  const UniformStream stream(5);
  for (auto _ : state) sys.step(st, stream);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(vol.size()));
}
BENCHMARK(BM_CoupledStep)->Args({32, 1})->Args({128, 1})->Args({128, 4})->Unit(benchmark::kMicrosecond);

static void BM_ExactRho(benchmark::State& state) {
  const auto d = ising(1.0, 1);
  const Volume vol = Volume::torus(1, {static_cast<int>(state.range(0))});
  for (auto _ : state)
    benchmark::DoNotOptimize(exact_rho<double>(*d, vol, BoundaryCondition::constant(0), 12));
}
BENCHMARK(BM_ExactRho)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
