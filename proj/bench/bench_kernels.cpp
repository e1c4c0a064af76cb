// Serial reference versus OpenMP path for the replicate-level kernels.
#include <benchmark/benchmark.h>

#include "splitinf/bootstrap.hpp"
#include "splitinf/loco.hpp"
#include "splitinf/simharness.hpp"
#include "splitinf/stats.hpp"

namespace {

using namespace splitinf;

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

const Generated& setting_b() {
    static const Generated gen = [] {
        SettingSpec spec;
        spec.setting = Setting::B;
        spec.n = 400;
        spec.p = 20;
        spec.rng = SeededRng(7);
        return generate(spec);
    }();
    return gen;
}

void BM_BootCiBeta(benchmark::State& state) {
    const Dataset& data = setting_b().data;
    const IndexList s{0, 1, 2, 3, 4};
    BootstrapConfig cfg;
    cfg.replicates = 2000;
    cfg.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(boot_ci_beta(data, s, cfg));
}

void BM_GaussianSupNorms(benchmark::State& state) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(10, 10);
    cov.diagonal().setLinSpaced(10, 0.5, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_sup_norms(cov, 100000, SeededRng(3), exec_of(state)));
}

void BM_LocoBoot(benchmark::State& state) {
    const Dataset& data = setting_b().data;
    const SelectedModel model = select_topk(data, 5);
    LocoConfig cfg = LocoConfig::defaults_for(data, SeededRng(5));
    const DeltaMatrix deltas = delta_matrix(model, data, cfg);
    BootstrapConfig bcfg;
    bcfg.replicates = 5000;
    bcfg.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(loco_ci_boot(deltas, bcfg));
}

void BM_OracleTargets(benchmark::State& state) {
    const Generated& gen = setting_b();
    const SelectedModel model = select_topk(gen.data, 5);
    OracleRequest req;
    req.gamma = req.phi = req.rho = true;
    for (auto _ : state)
        benchmark::DoNotOptimize(oracle_targets(gen.truth, model, req, 200000, SeededRng(11), exec_of(state)));
}

} // namespace

BENCHMARK(BM_BootCiBeta)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianSupNorms)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LocoBoot)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleTargets)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
