#include "ssmreduce/bench.hpp"
#include "ssmreduce/compare.hpp"
#include "ssmreduce/lsm.hpp"
#include "ssmreduce/ssm.hpp"

#include <benchmark/benchmark.h>

using namespace ssmreduce;

namespace {

MechanicalSystem chain_system(int n, bool damped) {
    ChainSpec c;
    c.n_dof = n;
    c.kappa2 = 0.1;
    c.kappa3 = 0.05;
    if (damped) c.c = 0.01;
    const FullSystem f = oscillator_chain(c);
    return decouple_modeling_mode(f, f.mode_shape);
}

void BM_LsmGeneral(benchmark::State& state) {
    const MechanicalSystem sys = chain_system(static_cast<int>(state.range(0)), false);
    for (auto _ : state) benchmark::DoNotOptimize(lsm_reduce_general(sys));
}
BENCHMARK(BM_LsmGeneral)->Arg(4)->Arg(12)->Arg(24);

void BM_LsmModal(benchmark::State& state) {
    const ModalSystem ms = modal_transform(chain_system(static_cast<int>(state.range(0)), false));
    for (auto _ : state) benchmark::DoNotOptimize(lsm_reduce_modal(ms));
}
BENCHMARK(BM_LsmModal)->Arg(4)->Arg(12)->Arg(24);

void BM_SsmOneDof(benchmark::State& state) {
    const ModalSystem ms = modal_transform(chain_system(static_cast<int>(state.range(0)), true));
    SsmOptions o;
    o.resonance_tol = 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(ssm_reduce(ms, o));
}
BENCHMARK(BM_SsmOneDof)->Arg(4)->Arg(12)->Arg(24);

void BM_ModalTransform(benchmark::State& state) {
    const MechanicalSystem sys = chain_system(static_cast<int>(state.range(0)), true);
    for (auto _ : state) benchmark::DoNotOptimize(modal_transform(sys));
}
BENCHMARK(BM_ModalTransform)->Arg(12)->Arg(24);

void BM_MethodComparison(benchmark::State& state) {
    const ModalSystem ms = modal_transform(chain_system(12, false));
    for (auto _ : state) benchmark::DoNotOptimize(comparison_report(ms));
}
BENCHMARK(BM_MethodComparison);

}  // namespace
