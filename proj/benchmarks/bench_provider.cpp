#include <benchmark/benchmark.h>

#include "curate/fs_util.hpp"
#include "curate/provider.hpp"
#include "curate/structured_output.hpp"

namespace {

void BM_RequestKey(benchmark::State& state) {
    const auto spec = curate::parse_task_spec(curate::read_text_file(CURATE_SOURCE_DIR "/data/faculty/task.yaml"));
    const auto set = curate::parse_entity_set(curate::read_text_file(CURATE_SOURCE_DIR "/data/faculty/entities.csv"), spec);
    const auto request = curate::make_curation_request(spec, curate::render_prompt(spec, set.rows[0]));
    for (auto _ : state) benchmark::DoNotOptimize(curate::request_key(request));
}
BENCHMARK(BM_RequestKey);

void BM_ParseStructuredOutput(benchmark::State& state) {
    const auto spec = curate::parse_task_spec(curate::read_text_file(CURATE_SOURCE_DIR "/data/faculty/task.yaml"));
    const std::string reply =
        R"({"degree_institution":{"status":"found","value":"Northfield University"},)"
        R"("degree_year":{"status":"found","value":1998},"first_hire_institution":{"status":"not_found"}})";
    for (auto _ : state) benchmark::DoNotOptimize(curate::parse_structured_output(reply, spec));
}
BENCHMARK(BM_ParseStructuredOutput);

}  // namespace
