#include <doctest.h>

#include <fstream>
#include <random>

#include "curate/run_dir.hpp"
#include "support.hpp"

using namespace curate;
using namespace curate::testing;

namespace {

struct NobelConfig {
    TaskSpec spec = parse_task_spec(data_file("nobel/task.yaml"));
    EntitySet entities = parse_entity_set(data_file("nobel/entities.csv"), spec);
};

EntityResult sample_result(const std::string& id) {
    EntityResult r;
    r.entity_id = id;
    r.attempts = 2;
    r.usage = {10, 20, 3};
    r.finished_at = "2026-01-01T00:00:00Z";
    r.attribute_results = {
        AttributeResult{"is_alive", AttributeStatus::Found, Value{false}, {}},
        AttributeResult{"death_date", AttributeStatus::Found, Value{std::string("2001-02-03")}, {}},
    };
    return r;
}

}  // namespace

TEST_SUITE("run_dir") {
    TEST_CASE("file stems round trip for arbitrary identifiers") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 2000; ++trial) {
            std::string id(std::uniform_int_distribution<int>(0, 24)(rng), '\0');
            for (auto& c : id) c = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
            const auto stem = encode_file_stem(id);
            CHECK_FALSE(stem.empty());
            CHECK(stem.find('/') == std::string::npos);
            CHECK(stem.find('.') == std::string::npos);
            for (unsigned char c : stem) CHECK((std::isalnum(c) || c == '_' || c == '-' || c == '%'));
            CHECK(decode_file_stem(stem) == id);
        }
        CHECK(encode_file_stem("Ada Lovelace|1843") != encode_file_stem("Ada_Lovelace|1843"));
        CHECK(encode_file_stem("plain-id_1") == "plain-id_1");
    }

    TEST_CASE("initialize writes a manifest that restores the configuration") {
        TempDir tmp;
        NobelConfig cfg;
        RunDir dir(tmp.path());
        dir.initialize(cfg.spec, cfg.entities, "replay:test");
        const auto manifest = dir.read_manifest();
        CHECK(manifest["config_hash"] == config_hash(cfg.spec, cfg.entities));
        CHECK(manifest["task_name"] == "nobel_death");
        CHECK(manifest["entity_count"] == 100);
        CHECK(manifest["provider"] == "replay:test");
        const auto [spec, entities] = dir.load_config();
        CHECK(spec == cfg.spec);
        CHECK(entities == cfg.entities);
        CHECK(fs::is_directory(dir.results_dir()));
    }

    TEST_CASE("a changed configuration is refused") {
        TempDir tmp;
        NobelConfig cfg;
        RunDir dir(tmp.path());
        dir.initialize(cfg.spec, cfg.entities, "x");
        dir.initialize(cfg.spec, cfg.entities, "y");
        auto changed = cfg.spec;
        changed.attributes[0].question_template += "?";
        try {
            dir.initialize(changed, cfg.entities, "x");
            FAIL("expected ConfigHashMismatch");
        } catch (const RunDirError& e) {
            CHECK(e.kind() == RunDirErrorKind::ConfigHashMismatch);
        }
        auto fewer = cfg.entities;
        fewer.rows.pop_back();
        CHECK_THROWS_AS(dir.initialize(cfg.spec, fewer, "x"), RunDirError);
    }

    TEST_CASE("config hash ignores nothing that matters") {
        NobelConfig cfg;
        const auto base = config_hash(cfg.spec, cfg.entities);
        auto spec = cfg.spec;
        spec.search_enabled = false;
        CHECK(config_hash(spec, cfg.entities) != base);
        auto reordered = cfg.entities;
        std::swap(reordered.rows[0], reordered.rows[1]);
        CHECK(config_hash(cfg.spec, reordered) != base);
        CHECK(config_hash(parse_task_spec(serialize_task_spec(cfg.spec)), cfg.entities) == base);
    }

    TEST_CASE("scan separates completed, failed and pending") {
        TempDir tmp;
        NobelConfig cfg;
        RunDir dir(tmp.path());
        dir.initialize(cfg.spec, cfg.entities, "x");
        const auto& rows = cfg.entities.rows;
        dir.write_result(sample_result(rows[0].entity_id));
        dir.write_failed(FailedEntity{rows[1].entity_id, "exhausted_attempts", "boom", 3, {1, 1, 1}, "t"});
        const auto state = dir.scan(cfg.entities);
        CHECK(state.completed == std::set<std::string>{rows[0].entity_id});
        CHECK(state.failed == std::set<std::string>{rows[1].entity_id});
        CHECK(state.pending.size() == 98);
        CHECK(state.pending.front() == rows[2].entity_id);

        const auto back = dir.read_result(rows[0].entity_id, cfg.spec);
        REQUIRE(back.has_value());
        CHECK(back->attribute_results == sample_result(rows[0].entity_id).attribute_results);
        CHECK(back->usage == Usage{10, 20, 3});
        CHECK(dir.read_failed(rows[1].entity_id)->last_error == "boom");

        dir.write_result(sample_result(rows[1].entity_id));
        CHECK_FALSE(fs::exists(dir.failed_path(rows[1].entity_id)));
        CHECK(dir.scan(cfg.entities).completed.size() == 2);
    }

    TEST_CASE("telemetry tolerates a truncated final line only") {
        TempDir tmp;
        const auto path = tmp / "telemetry.jsonl";
        {
            TelemetryWriter writer(path);
            for (int i = 1; i <= 3; ++i) writer.append(TelemetryLine{"e", i, "m", i != 2, {1, 2, i}, "ok"});
        }
        {
            std::ofstream out(path, std::ios::app);
            out << R"({"entity_id":"e","att)";
        }
        const auto lines = read_telemetry(path);
        REQUIRE(lines.size() == 3);
        CHECK(lines[1].attempt == 2);
        CHECK_FALSE(lines[1].search_tool_declared);
        CHECK(lines[2].usage == Usage{1, 2, 3});

        std::ofstream(tmp / "bad.jsonl") << "garbage\n" << TelemetryLine{"e", 1, "m", true, {}, "ok"}.to_json().dump() << "\n";
        CHECK_THROWS_AS(read_telemetry(tmp / "bad.jsonl"), IoError);
    }

    TEST_CASE("atomic writes leave no temporary files") {
        TempDir tmp;
        for (int i = 0; i < 20; ++i) write_file_atomic(tmp / "f.json", std::to_string(i));
        CHECK(read_text_file(tmp / "f.json") == "19");
        CHECK(snapshot(tmp.path()).size() == 1);
    }
}
