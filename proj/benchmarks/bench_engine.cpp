#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "curate/compiler.hpp"
#include "curate/engine.hpp"
#include "curate/fs_util.hpp"
#include "curate/replay_provider.hpp"

namespace {

namespace fs = std::filesystem;

void BM_ReplayFacultyRun(benchmark::State& state) {
    const auto spec = curate::parse_task_spec(curate::read_text_file(CURATE_SOURCE_DIR "/data/faculty/task.yaml"));
    const auto set = curate::parse_entity_set(curate::read_text_file(CURATE_SOURCE_DIR "/data/faculty/entities.csv"), spec);
    curate::ReplayProvider replay(fs::path(CURATE_SOURCE_DIR) / "fixtures/faculty");
    const auto root = fs::temp_directory_path() / ("curate-bench-" + std::to_string(std::random_device{}()));
    for (auto _ : state) {
        state.PauseTiming();
        fs::remove_all(root);
        state.ResumeTiming();
        curate::ManualClock clock;
        curate::run_task(spec, set, replay, root, {.clock = &clock});
        curate::compile_and_write(root);
    }
    fs::remove_all(root);
}
BENCHMARK(BM_ReplayFacultyRun)->Unit(benchmark::kMillisecond);

}  // namespace
