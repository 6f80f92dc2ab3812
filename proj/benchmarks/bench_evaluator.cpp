#include <benchmark/benchmark.h>

#include "curate/evaluator.hpp"

namespace {

void BM_ClopperPearson(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(curate::clopper_pearson(k, n, 0.05));
        k = (k + 7) % (n + 1);
    }
}
BENCHMARK(BM_ClopperPearson)->Arg(10)->Arg(100)->Arg(10000);

void BM_NormalizeText(benchmark::State& state) {
    const std::string text = "  Massachusetts   Institute of\tTechnology  ";
    for (auto _ : state) benchmark::DoNotOptimize(curate::normalize_text(text));
}
BENCHMARK(BM_NormalizeText);

}  // namespace
