#include <benchmark/benchmark.h>

#include "ulpsim/decks.hpp"
#include "ulpsim/engine.hpp"

using namespace ulpsim;

namespace {

void BM_DcOperatingPoint(benchmark::State& state) {
    const Circuit c = compile_netlist(generate_ulpls());
    for (auto _ : state) {
        benchmark::DoNotOptimize(dc_operating_point(c, 300.15));
    }
}
BENCHMARK(BM_DcOperatingPoint);

void BM_UlplsTransientPeriod(benchmark::State& state) {
    DeckParams p;
    p.vin_amplitude = 0.4;
    const Circuit c = compile_netlist(generate_ulpls(p));
    for (auto _ : state) {
        benchmark::DoNotOptimize(transient(c, 1e-9, 10e-6, 300.15));
    }
}
BENCHMARK(BM_UlplsTransientPeriod)->Unit(benchmark::kMillisecond);

void BM_RcTransient(benchmark::State& state) {
    const Circuit c = compile_netlist(
        "rc\nV1 a 0 PULSE(0 0.8 200n 100n 100n 1 2.1)\nR1 a b 1k\nC1 b 0 1n\n.end");
    for (auto _ : state) {
        benchmark::DoNotOptimize(transient(c, 1e-8, 5e-6, 300.15));
    }
}
BENCHMARK(BM_RcTransient)->Unit(benchmark::kMillisecond);

} // namespace
