#include <doctest.h>

#include <random>

#include "curate/compiler.hpp"
#include "curate/csv.hpp"
#include "curate/engine.hpp"
#include "curate/replay_provider.hpp"
#include "support.hpp"

using namespace curate;
using namespace curate::testing;

namespace {

struct FacultyRun {
    TempDir tmp;
    TaskSpec spec = parse_task_spec(data_file("faculty/task.yaml"));
    EntitySet entities = parse_entity_set(data_file("faculty/entities.csv"), spec);

    FacultyRun() {
        ReplayProvider replay(fixtures_dir() / "faculty");
        ManualClock clock;
        run_task(spec, entities, replay, tmp.path(), {.clock = &clock});
    }
    const fs::path& dir() const { return tmp.path(); }
};

const std::string& entity(const FacultyRun& run, std::size_t i) { return run.entities.rows.at(i).entity_id; }

}  // namespace

TEST_SUITE("compiler") {
    TEST_CASE("a settled run compiles to one row per entity") {
        FacultyRun run;
        const auto table = compile_run(run.dir());
        CHECK(table.rows.size() == 100);
        CHECK(table.header().size() == 2 + 9);
        CHECK(table.header()[0] == "name");
        CHECK(table.header()[2] == "degree_institution");
        CHECK(table.header()[3] == "degree_institution__status");
        CHECK(table.header()[4] == "degree_institution__provenance");
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            CHECK(table.rows[i].entity_id == entity(run, i));
            for (const auto& cell : table.rows[i].cells) {
                CHECK(cell.provenance == CellProvenance::Model);
                CHECK(cell.value.has_value() == (cell.status == CellStatus::Found));
            }
        }
        const auto& row2 = table.rows[2];
        CHECK(row2.cells[0].status == CellStatus::NotFound);
    }

    TEST_CASE("failed entities become failed cells") {
        TempDir tmp;
        const auto spec = parse_task_spec(data_file("nobel/task.yaml"));
        const auto entities = parse_entity_set(data_file("nobel/entities.csv"), spec);
        FunctionProvider provider([&](const CurationRequest& r) {
            if (r.user.find(entities.rows[4].at("name")) != std::string::npos) return reply(r, "unsure");
            return reply(r, R"({"is_alive":{"status":"found","value":true},"death_date":{"status":"not_found"}})");
        });
        ManualClock clock;
        run_task(spec, entities, provider, tmp.path(), {.clock = &clock});
        const auto table = compile_run(tmp.path());
        for (const auto& cell : table.rows[4].cells) {
            CHECK(cell.status == CellStatus::Failed);
            CHECK(cell.provenance == CellProvenance::Failed);
            CHECK_FALSE(cell.value.has_value());
        }
        CHECK(table.rows[5].cells[0].status == CellStatus::Found);
        const auto csv = curated_to_csv(table);
        CHECK(csv.find(",failed,failed") != std::string::npos);
    }

    TEST_CASE("an unfinished run lists every missing entity") {
        TempDir tmp;
        const auto spec = parse_task_spec(data_file("nobel/task.yaml"));
        const auto entities = parse_entity_set(data_file("nobel/entities.csv"), spec);
        RunDir(tmp.path()).initialize(spec, entities, "x");
        try {
            compile_run(tmp.path());
            FAIL("expected IncompleteRun");
        } catch (const IncompleteRun& e) {
            CHECK(e.kind() == CompileErrorKind::IncompleteRun);
            CHECK(e.missing().size() == 100);
            CHECK(e.missing().front() == entities.rows.front().entity_id);
        }
    }

    TEST_CASE("overrides replace exactly the named cells") {
        FacultyRun run;
        const auto table = compile_run(run.dir());
        const OverrideSet overrides = {
            {entity(run, 2), "degree_institution", AttributeStatus::Found, Value{std::string("Northfield University")}},
            {entity(run, 5), "degree_year", AttributeStatus::Found, Value{std::int64_t{1999}}},
            {entity(run, 9), "first_hire_institution", AttributeStatus::NotFound, std::nullopt},
        };
        const auto edited = apply_overrides(table, overrides);
        std::size_t changed = 0;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            for (std::size_t c = 0; c < table.attributes.size(); ++c) {
                if (!(table.rows[r].cells[c] == edited.rows[r].cells[c])) ++changed;
            }
        }
        CHECK(changed == 3);
        const auto& cell = edited.rows[2].cells[0];
        CHECK(cell.provenance == CellProvenance::Human);
        CHECK(cell.status == CellStatus::Found);
        CHECK(cell.value == Value{std::string("Northfield University")});
        CHECK(edited.rows[9].cells[2].status == CellStatus::NotFound);
        CHECK(edited.rows[9].cells[2].provenance == CellProvenance::Human);
    }

    TEST_CASE("random override sets touch only their cells") {
        FacultyRun run;
        const auto table = compile_run(run.dir());
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 50; ++trial) {
            OverrideSet set;
            std::set<std::pair<std::size_t, std::size_t>> targets;
            const int n = std::uniform_int_distribution<int>(0, 20)(rng);
            for (int i = 0; i < n; ++i) {
                const std::size_t r = rng() % 100, c = rng() % 3;
                if (!targets.emplace(r, c).second) continue;
                set.push_back({entity(run, r), table.attributes[c].name, AttributeStatus::NotFound, std::nullopt});
            }
            const auto edited = apply_overrides(table, set);
            for (std::size_t r = 0; r < 100; ++r) {
                for (std::size_t c = 0; c < 3; ++c) {
                    const bool target = targets.contains({r, c});
                    CHECK((edited.rows[r].cells[c] == table.rows[r].cells[c]) ==
                          (!target || table.rows[r].cells[c] == CuratedCell{CellStatus::NotFound, std::nullopt, CellProvenance::Human}));
                    if (target) CHECK(edited.rows[r].cells[c].provenance == CellProvenance::Human);
                }
            }
        }
    }

    TEST_CASE("an empty override set changes nothing") {
        FacultyRun run;
        const auto table = compile_run(run.dir());
        CHECK(curated_to_csv(apply_overrides(table, {})) == curated_to_csv(table));
        CHECK(curated_to_jsonl(apply_overrides(table, {})) == curated_to_jsonl(table));
    }

    TEST_CASE("invalid overrides are rejected by kind") {
        FacultyRun run;
        const auto table = compile_run(run.dir());
        auto kind_of = [&](const std::string& body) {
            try {
                parse_overrides_csv("entity_id,attribute,status,value\n" + body, table);
            } catch (const CompileError& e) {
                return e.kind();
            }
            FAIL("accepted: " << body);
            return CompileErrorKind::MalformedTable;
        };
        const auto id = csv::escape_field(entity(run, 0));
        CHECK(kind_of("Nobody|Nowhere,degree_year,found,1990\n") == CompileErrorKind::UnknownEntity);
        CHECK(kind_of(id + ",shoe_size,found,42\n") == CompileErrorKind::UnknownAttribute);
        CHECK(kind_of(id + ",degree_year,found,1990\n" + id + ",degree_year,not_found,\n") ==
              CompileErrorKind::DuplicateOverride);
        CHECK(kind_of(id + ",degree_year,found,nineteen\n") == CompileErrorKind::InvalidOverride);
        CHECK(kind_of(id + ",degree_year,not_found,1990\n") == CompileErrorKind::InvalidOverride);
        CHECK(kind_of(id + ",degree_year,maybe,\n") == CompileErrorKind::InvalidOverride);
        CHECK_THROWS_AS(parse_overrides_csv("a,b\n", table), CompileError);
    }

    TEST_CASE("overrides serialize and parse back") {
        FacultyRun run;
        const auto table = compile_run(run.dir());
        const OverrideSet set = {
            {entity(run, 1), "degree_institution", AttributeStatus::Found, Value{std::string("A, \"quoted\" name")}},
            {entity(run, 3), "degree_year", AttributeStatus::NotFound, std::nullopt},
        };
        CHECK(parse_overrides_csv(serialize_overrides(set), table) == set);
    }

    TEST_CASE("curated CSV round trips") {
        FacultyRun run;
        const auto outcome = compile_and_write(run.dir());
        CHECK(outcome.done == 100);
        CHECK(outcome.overrides_applied == 0);
        const auto text = read_text_file(run.dir() / "curated.csv");
        const auto back = curated_from_csv(text, run.spec);
        CHECK(back == outcome.table);
        CHECK(curated_to_csv(back) == text);
        const auto jsonl = read_text_file(run.dir() / "curated.jsonl");
        CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 100);
        CHECK(RunDir(run.dir()).read_manifest().contains("compiled"));
    }

    TEST_CASE("compile_and_write applies the stored overrides") {
        FacultyRun run;
        const auto table = compile_run(run.dir());
        write_file_atomic(run.dir() / "overrides.csv",
                          serialize_overrides({{entity(run, 2), "degree_institution", AttributeStatus::Found,
                                                Value{std::string("Northfield University")}}}));
        const auto outcome = compile_and_write(run.dir());
        CHECK(outcome.overrides_applied == 1);
        CHECK(outcome.table.rows[2].cells[0].provenance == CellProvenance::Human);
        CHECK(outcome.table.rows[3] == table.rows[3]);
    }
}
