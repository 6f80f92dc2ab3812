#include <benchmark/benchmark.h>

#include "curate/csv.hpp"
#include "curate/fs_util.hpp"

namespace {

void BM_ParseEntityCsv(benchmark::State& state) {
    const auto text = curate::read_text_file(CURATE_SOURCE_DIR "/data/faculty/truth.csv");
    for (auto _ : state) benchmark::DoNotOptimize(curate::csv::parse(text));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseEntityCsv);

}  // namespace
