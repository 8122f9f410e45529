#include "ssmreduce/analysis.hpp"
#include "ssmreduce/bench.hpp"
#include "ssmreduce/sim.hpp"
#include "ssmreduce/ssm.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

using namespace ssmreduce;

namespace {

const Preset& damped_chain() {
    static const Preset p = make_preset("chain12-damped");
    return p;
}

double horizon() { return 20.0 * 2.0 * std::numbers::pi / chain_frequency(*damped_chain().chain, 1); }

IntegratorOptions options(bool stiff) {
    IntegratorOptions o;
    o.rtol = 1e-8;
    o.atol = 1e-10;
    o.stiff = stiff;
    return o;
}

void BM_FullChain(benchmark::State& state) {
    const Preset& p = damped_chain();
    const RhsFn rhs = full_rhs(p.full);
    std::vector<double> z0(2 * p.full.dofs(), 0.0);
    for (std::size_t i = 0; i < p.full.dofs(); ++i) z0[i] = 0.3 * p.full.mode_shape[static_cast<Eigen::Index>(i)];
    const double T = horizon();
    const auto times = uniform_times(0.0, T, 201);
    for (auto _ : state) benchmark::DoNotOptimize(integrate(rhs, z0, 0.0, T, times, options(state.range(0) != 0)));
}
BENCHMARK(BM_FullChain)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ReducedChain(benchmark::State& state) {
    const Preset& p = damped_chain();
    SsmOptions so;
    so.resonance_tol = 0.0;
    const RhsFn rhs = ssm_rhs(ssm_reduce(modal_transform(p.system), so));
    const double T = horizon();
    const auto times = uniform_times(0.0, T, 201);
    for (auto _ : state) benchmark::DoNotOptimize(integrate(rhs, {0.3, 0.0}, 0.0, T, times, options(state.range(0) != 0)));
}
BENCHMARK(BM_ReducedChain)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ShootingBackbone(benchmark::State& state) {
    LsmModel m;
    m.a2 = 0.1;
    m.a3 = 0.3;
    m.b12 = 0.1;
    std::vector<double> r;
    for (int i = 1; i <= 16; ++i) r.push_back(0.02 * i);
    ShootingOptions o;
    o.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(shooting_backbone(m, r, o));
}
BENCHMARK(BM_ShootingBackbone)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_HarmonicBalance(benchmark::State& state) {
    SsmModel m;
    m.c = 0.02;
    m.cubic_direct[0] = 1.0;
    m.F1 = 1.0;
    m.epsilon = 0.005;
    for (auto _ : state) benchmark::DoNotOptimize(frc_harmonic_balance(m, 0.9, 1.2));
}
BENCHMARK(BM_HarmonicBalance)->Unit(benchmark::kMillisecond);

}  // namespace
