#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "readoutsim/optimizer.hpp"
#include "readoutsim/protocols.hpp"
#include "readoutsim/rng.hpp"

namespace {

using namespace rsim;

void BM_CavityStep(benchmark::State& state) {
    const DeviceParams dev = reference_device();
    const DerivedParams der = derive_params(dev);
    CavityPropagator prop(dev, der, 8.0762e9, 1e-9);
    const Complex drive(2e7, 0);
    Complex alpha{};
    for (auto _ : state) {
        alpha = prop.step(alpha, drive, QubitState::ground);
        benchmark::DoNotOptimize(alpha);
    }
}
BENCHMARK(BM_CavityStep);

void BM_SimulateField(benchmark::State& state) {
    ExperimentSetup s = reference_setup(1);
    const DerivedParams der = derive_params(s.device);
    StatePath path{QubitState::excited, {120e-9}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_field(s.pulse, path, s.device, der));
    }
}
BENCHMARK(BM_SimulateField);

void BM_GenerateShot(benchmark::State& state) {
    ExperimentSetup s = reference_setup(1);
    ShotContext ctx = s.shot_context(streams::shots);
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_shot(i++, Intent::prepare_e, s.pulse, ctx));
    }
}
BENCHMARK(BM_GenerateShot);

void BM_FitThreshold(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> unit;
    std::vector<double> g(n);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = unit(rng);
        e[i] = 3.0 + unit(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_threshold(g, e));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitThreshold)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();

void BM_RunFidelity(benchmark::State& state) {
    ExperimentSetup s = reference_setup(1);
    s.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_fidelity(s, static_cast<std::size_t>(state.range(0))));
    }
}
BENCHMARK(BM_RunFidelity)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
