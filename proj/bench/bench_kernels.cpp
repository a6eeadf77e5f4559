// Serial reference vs OpenMP kernels on the hot paths.
//   dcrbm_bench --benchmark_filter=run_chains

#include <vector>

#include <benchmark/benchmark.h>

#include "dcrbm/evaluator.hpp"
#include "dcrbm/kernels.hpp"
#include "dcrbm/reference.hpp"
#include "dcrbm/trainers.hpp"

using namespace dcrbm;

namespace {

RbmParams random_model(std::size_t m, std::size_t n) {
    RngStream rng(99, 0);
    RbmParams p = RbmParams::zeros({m, n});
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
        p.weights.data()[k] = 0.1 * rng.normal();
    }
    for (Eigen::Index k = 0; k < p.visible_bias.size(); ++k) {
        p.visible_bias[k] = 0.1 * rng.normal();
    }
    for (Eigen::Index k = 0; k < p.hidden_bias.size(); ++k) {
        p.hidden_bias[k] = 0.1 * rng.normal();
    }
    return p;
}

template <auto Fn>
void log_partition(benchmark::State& state) {
    const RbmParams p = random_model(784, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(Fn(p));
    }
}

template <auto Fn>
void model_expectations(benchmark::State& state) {
    const RbmParams p = random_model(784, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(Fn(p));
    }
}

template <auto Fn>
void run_chains(benchmark::State& state) {
    const RbmParams p = random_model(784, 500);
    const auto chains = static_cast<std::size_t>(state.range(0));
    Matrix states = Matrix::Zero(784, static_cast<Eigen::Index>(chains));
    auto rngs = chain_streams(1, chains);
    for (auto _ : state) {
        Fn(p, states, 1, Vector(), Vector(), rngs);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(chains));
}

template <auto Fn>
void ais_log_weights(benchmark::State& state) {
    const RbmParams p = random_model(784, 500);
    AisConfig cfg;
    cfg.num_temps = static_cast<int>(state.range(0));
    const std::vector<double> betas = temperature_ladder(cfg);
    for (auto _ : state) {
        auto rngs = chain_streams(2, 100);
        benchmark::DoNotOptimize(Fn(p, betas, rngs));
    }
}

} // namespace

BENCHMARK(log_partition<reference::log_partition>)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(log_partition<kernels::log_partition>)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(model_expectations<reference::model_expectations>)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(model_expectations<kernels::model_expectations>)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(run_chains<reference::run_chains>)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(run_chains<kernels::run_chains>)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(ais_log_weights<reference::ais_log_weights>)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(ais_log_weights<kernels::ais_log_weights>)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
