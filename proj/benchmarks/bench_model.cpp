#include <benchmark/benchmark.h>

#include "ulpsim/model.hpp"

using namespace ulpsim;

namespace {

MosModel nmos_card() {
    MosModel m;
    m.vth0 = 0.503;
    m.kp = 1.5e-4;
    m.lambda = 0.05;
    return m;
}

void BM_MosIdsCached(benchmark::State& state) {
    const MosModel m = nmos_card();
    const TempParams tp = temperature_adjust(m, 200e-9, 40e-9, 300.15);
    double vg = 0.0;
    for (auto _ : state) {
        vg += 1e-6;
        benchmark::DoNotOptimize(mos_ids_at(m, tp, vg, 0.8, 0.0));
    }
}
BENCHMARK(BM_MosIdsCached);

void BM_MosIdsWithTemp(benchmark::State& state) {
    const MosModel m = nmos_card();
    double vg = 0.0;
    for (auto _ : state) {
        vg += 1e-6;
        benchmark::DoNotOptimize(mos_ids(m, 200e-9, 40e-9, vg, 0.8, 0.0, 300.15));
    }
}
BENCHMARK(BM_MosIdsWithTemp);

} // namespace
