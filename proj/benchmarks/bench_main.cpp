#include <benchmark/benchmark.h>

#include "mlnl/estimator.hpp"
#include "mlnl/metrics.hpp"
#include "mlnl/model.hpp"
#include "mlnl/noise.hpp"

using namespace mlnl;

namespace {

Dataset bench_data(std::size_t n, std::size_t k = 8) {
    GenConfig g;
    g.n = n;
    g.k = k;
    return generate(g);
}

MlpModel bench_model(std::size_t d, std::size_t k) {
    RandomStream rng(7);
    return MlpModel::random({d, 64, k}, Activation::tanh, 1.0, rng);
}

void BM_Forward(benchmark::State& state) {
    const Dataset ds = bench_data(static_cast<std::size_t>(state.range(0)));
    const MlpModel m = bench_model(ds.dim(), ds.class_count);
    for (auto _ : state) benchmark::DoNotOptimize(forward_logits(m, ds.features));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1000)->Arg(10000);

void BM_TrainEpoch(benchmark::State& state) {
    const Dataset ds = bench_data(static_cast<std::size_t>(state.range(0)));
    const MlpModel m = bench_model(ds.dim(), ds.class_count);
    TrainConfig cfg;
    cfg.epochs = 1;
    const bool corrected = state.range(1) != 0;
    const LossMode mode = corrected ? LossMode{CorrectedAsl{symmetric_matrix(ds.class_count, 0.4).values,
                                                            std::vector<std::uint8_t>(ds.size(), 0), true}}
                                    : LossMode{PlainAsl{}};
    for (auto _ : state) benchmark::DoNotOptimize(train(m, ds, mode, cfg, AslParams{}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpoch)->Args({4000, 0})->Args({4000, 1})->Unit(benchmark::kMillisecond);

void BM_Inject(benchmark::State& state) {
    const Dataset ds = bench_data(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(inject(ds, {.eta = 0.4, .seed = 1}));
}
BENCHMARK(BM_Inject)->Arg(12000)->Unit(benchmark::kMillisecond);

void BM_EstimateGalc(benchmark::State& state) {
    const Dataset ds = bench_data(static_cast<std::size_t>(state.range(0)));
    const auto split = strip_single_label(ds);
    const MlpModel m = bench_model(ds.dim(), ds.class_count);
    for (auto _ : state) {
        const auto reg = compute_regulators(m, split.singles);
        benchmark::DoNotOptimize(estimate_galc_slr(m, split.multi_only, reg));
    }
}
BENCHMARK(BM_EstimateGalc)->Arg(1200)->Arg(12000)->Unit(benchmark::kMillisecond);

void BM_MeanAp(benchmark::State& state) {
    const Dataset ds = bench_data(static_cast<std::size_t>(state.range(0)));
    const MlpModel m = bench_model(ds.dim(), ds.class_count);
    const Matrix p = predict_sigmoid(m, ds.features);
    for (auto _ : state) benchmark::DoNotOptimize(compute_metrics(p, ds.labels));
}
BENCHMARK(BM_MeanAp)->Arg(2400)->Arg(24000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
