#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/special_functions/beta.hpp>

#include "curate/csv.hpp"
#include "curate/engine.hpp"
#include "curate/evaluator.hpp"
#include "curate/replay_provider.hpp"
#include "support.hpp"

using namespace curate;
using namespace curate::testing;

namespace {

struct Frozen {
    std::size_t k, n;
    double lo, hi;
};

// Reference bounds at alpha = 0.05, computed offline with mpmath and
// cross-checked against scipy.
constexpr Frozen kFrozen[] = {
    {44, 100, 0.34083602372345826, 0.54281250293668242},
    {97, 100, 0.91482394702571996, 0.99377002846169361},
    {3, 10, 0.066739511177734467, 0.6524528500599973},
    {100, 100, 0.96378330735482358, 1.0},
    {0, 100, 0.0, 0.036216692645176419},
    {2, 4, 0.067585986488542955, 0.93241401351145704},
    {1, 1, 0.025, 1.0},
};

Interval beta_oracle(std::size_t k, std::size_t n, double alpha) {
    Interval i;
    i.lo = k == 0 ? 0.0 : boost::math::ibeta_inv(static_cast<double>(k), static_cast<double>(n - k + 1), alpha / 2);
    i.hi = k == n ? 1.0 : boost::math::ibeta_inv(static_cast<double>(k + 1), static_cast<double>(n - k), 1 - alpha / 2);
    return i;
}

AttributeSpec string_attr(const std::string& name) {
    AttributeSpec a;
    a.name = name;
    a.question_template = "?";
    return a;
}

CuratedCell found(const std::string& v) { return {CellStatus::Found, Value{v}, CellProvenance::Model}; }
CuratedCell not_found() { return {CellStatus::NotFound, std::nullopt, CellProvenance::Model}; }
CuratedCell failed() { return {CellStatus::Failed, std::nullopt, CellProvenance::Failed}; }

/// One-attribute table and truth: entity i has truth "t<i>".
std::pair<CuratedTable, GroundTruth> single_column(const std::vector<CuratedCell>& cells) {
    CuratedTable table;
    table.key_columns = {"id"};
    table.attributes = {string_attr("x")};
    GroundTruth truth;
    truth.attributes = {"x"};
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto id = "e" + std::to_string(i);
        table.rows.push_back({id, {id}, {cells[i]}});
        truth.rows[id] = {Value{std::string("t" + std::to_string(i))}};
    }
    return {table, truth};
}

CuratedCell correct(std::size_t i) { return found("t" + std::to_string(i)); }

}  // namespace

TEST_SUITE("evaluator") {
    TEST_CASE("interval matches frozen reference values") {
        for (const auto& f : kFrozen) {
            CAPTURE(f.k);
            CAPTURE(f.n);
            const auto ci = clopper_pearson(f.k, f.n, 0.05);
            CHECK(std::abs(ci.lo - f.lo) < 1e-9);
            CHECK(std::abs(ci.hi - f.hi) < 1e-9);
        }
    }

    TEST_CASE("interval matches the inverse regularized beta function") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 400; ++trial) {
            const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 1000)(rng);
            const std::size_t k = std::uniform_int_distribution<std::size_t>(0, n)(rng);
            const double alpha = std::array{0.01, 0.05, 0.1, 0.2, 0.5}[trial % 5];
            const auto got = clopper_pearson(k, n, alpha);
            const auto want = beta_oracle(k, n, alpha);
            CAPTURE(k);
            CAPTURE(n);
            CAPTURE(alpha);
            CHECK(std::abs(got.lo - want.lo) < 1e-6);
            CHECK(std::abs(got.hi - want.hi) < 1e-6);
        }
    }

    TEST_CASE("edge counts have closed forms") {
        for (std::size_t n = 1; n <= 300; ++n) {
            for (double alpha : {0.01, 0.05, 0.1}) {
                const auto zero = clopper_pearson(0, n, alpha);
                CHECK(zero.lo == 0.0);
                CHECK(std::abs(zero.hi - (1 - std::pow(alpha / 2, 1.0 / static_cast<double>(n)))) < 1e-9);
                const auto all = clopper_pearson(n, n, alpha);
                CHECK(all.hi == 1.0);
                CHECK(std::abs(all.lo - std::pow(alpha / 2, 1.0 / static_cast<double>(n))) < 1e-9);
            }
        }
    }

    TEST_CASE("interval contains the estimate and is symmetric under complement") {
        for (std::size_t n = 1; n <= 50; ++n) {
            for (std::size_t k = 0; k <= n; ++k) {
                const auto ci = clopper_pearson(k, n, 0.05);
                const double p = static_cast<double>(k) / static_cast<double>(n);
                CHECK(ci.lo <= p);
                CHECK(p <= ci.hi);
                CHECK(0.0 <= ci.lo);
                CHECK(ci.hi <= 1.0);
                const auto mirror = clopper_pearson(n - k, n, 0.05);
                CHECK(std::abs(ci.lo - (1 - mirror.hi)) < 1e-10);
                CHECK(std::abs(ci.hi - (1 - mirror.lo)) < 1e-10);
            }
        }
    }

    TEST_CASE("a smaller alpha never narrows the interval") {
        std::mt19937_64 rng(32);
        for (int trial = 0; trial < 500; ++trial) {
            const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200)(rng);
            const std::size_t k = std::uniform_int_distribution<std::size_t>(0, n)(rng);
            const auto wide = clopper_pearson(k, n, 0.01);
            const auto narrow = clopper_pearson(k, n, 0.1);
            CHECK(wide.lo <= narrow.lo + 1e-12);
            CHECK(wide.hi >= narrow.hi - 1e-12);
        }
    }

    TEST_CASE("bad interval arguments are rejected") {
        auto kind = [](std::size_t k, std::size_t n, double a) {
            try {
                clopper_pearson(k, n, a);
            } catch (const EvalError& e) {
                return e.kind();
            }
            return EvalErrorKind::EmptyTable;
        };
        CHECK(kind(0, 0, 0.05) == EvalErrorKind::InvalidArgs);
        CHECK(kind(5, 4, 0.05) == EvalErrorKind::InvalidArgs);
        CHECK(kind(1, 4, 0.0) == EvalErrorKind::InvalidArgs);
        CHECK(kind(1, 4, 1.0) == EvalErrorKind::InvalidArgs);
        CHECK(kind(1, 4, std::nan("")) == EvalErrorKind::InvalidArgs);
    }

    TEST_CASE("tally counts correct, found and total") {
        auto [table, truth] = single_column({correct(0), correct(1), not_found(), found("wrong")});
        const auto cells = tally(table, truth, MatchRule{});
        REQUIRE(cells.size() == 1);
        CHECK(cells[0] == EvalCell{"x", 4, 3, 2});
        CHECK(accuracy(cells[0], Regime::IncludeNotFound) == 0.5);
        CHECK(accuracy(cells[0], Regime::FoundOnly) == doctest::Approx(2.0 / 3.0));
    }

    TEST_CASE("failed cells count as not found") {
        auto [table, truth] = single_column({correct(0), failed(), not_found()});
        CHECK(tally(table, truth, MatchRule{})[0] == EvalCell{"x", 3, 1, 1});
    }

    TEST_CASE("empty denominators are reported, not divided") {
        auto [table, truth] = single_column({not_found(), failed()});
        const auto cell = tally(table, truth, MatchRule{})[0];
        CHECK(cell.n_found == 0);
        CHECK(accuracy(cell, Regime::IncludeNotFound) == 0.0);
        try {
            accuracy(cell, Regime::FoundOnly);
            FAIL("expected EmptyDenominator");
        } catch (const EvalError& e) {
            CHECK(e.kind() == EvalErrorKind::EmptyDenominator);
        }
        const auto report = evaluate(table, truth, MatchRule{}, 0.05);
        const auto* entry = report.find("x", Regime::FoundOnly);
        REQUIRE(entry != nullptr);
        CHECK_FALSE(entry->accuracy.has_value());
        CHECK_FALSE(report.annotations.empty());
        CHECK(eval_report_to_json(report)["attributes"][0]["regimes"]["found_only"]["accuracy"] == "undefined");
    }

    TEST_CASE("found-only accuracy is never below include-not-found accuracy") {
        std::mt19937_64 rng(33);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<CuratedCell> cells;
            const int n = std::uniform_int_distribution<int>(1, 30)(rng);
            for (int i = 0; i < n; ++i) {
                switch (rng() % 4) {
                    case 0: cells.push_back(correct(i)); break;
                    case 1: cells.push_back(found("nope")); break;
                    case 2: cells.push_back(not_found()); break;
                    default: cells.push_back(failed()); break;
                }
            }
            auto [table, truth] = single_column(cells);
            const auto cell = tally(table, truth, MatchRule{})[0];
            CHECK(cell.k_correct <= cell.n_found);
            CHECK(cell.n_found <= cell.n_total);
            if (cell.n_found > 0) CHECK(accuracy(cell, Regime::FoundOnly) >= accuracy(cell, Regime::IncludeNotFound));
        }
    }

    TEST_CASE("an empty table is an error") {
        auto [table, truth] = single_column({});
        try {
            tally(table, truth, MatchRule{});
            FAIL("expected EmptyTable");
        } catch (const EvalError& e) {
            CHECK(e.kind() == EvalErrorKind::EmptyTable);
        }
    }

    TEST_CASE("an entity without truth is named") {
        auto [table, truth] = single_column({correct(0), correct(1)});
        truth.rows.erase("e1");
        try {
            tally(table, truth, MatchRule{});
            FAIL("expected MissingTruth");
        } catch (const EvalError& e) {
            CHECK(e.kind() == EvalErrorKind::MissingTruth);
            CHECK(std::string(e.what()).find("e1") != std::string::npos);
        }
    }

    TEST_CASE("string matching normalizes case and whitespace") {
        const MatchRule plain;
        CHECK(match_value(ValueKind::String, Value{std::string(" MIT ")}, Value{std::string("mit")}, plain));
        CHECK(match_value(ValueKind::String, Value{std::string("New  York\tUniversity")}, Value{std::string("new york university")}, plain));
        CHECK_FALSE(match_value(ValueKind::String, Value{std::string("MIT")}, Value{std::string("Massachusetts Institute of Technology")}, plain));
        const auto rule = load_alias_table("variant,canonical\nMIT,Massachusetts Institute of Technology\n");
        CHECK(match_value(ValueKind::String, Value{std::string("MIT")}, Value{std::string("Massachusetts Institute of Technology")}, rule));
        CHECK(match_value(ValueKind::String, Value{std::string("massachusetts institute of technology")}, Value{std::string(" mit")}, rule));
        CHECK(normalize_text("  A\t B  ") == "a b");
    }

    TEST_CASE("every faculty alias matches its canonical name") {
        const auto text = data_file("faculty/aliases.csv");
        const auto rule = load_alias_table(text);
        const auto rows = csv::parse(text);
        REQUIRE(rows.size() > 1);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const Value variant{rows[i][0]}, canonical{rows[i][1]};
            CAPTURE(rows[i][0]);
            CHECK(match_value(ValueKind::String, variant, canonical, rule));
            CHECK(match_value(ValueKind::String, canonical, variant, rule));
            for (std::size_t j = 1; j < rows.size(); ++j) {
                if (normalize_text(rows[j][1]) != normalize_text(rows[i][1])) {
                    CHECK_FALSE(match_value(ValueKind::String, variant, Value{rows[j][1]}, rule));
                }
            }
        }
    }

    TEST_CASE("non-string kinds compare exactly") {
        const MatchRule rule;
        CHECK(match_value(ValueKind::Year, Value{std::int64_t{1990}}, Value{std::int64_t{1990}}, rule));
        CHECK_FALSE(match_value(ValueKind::Year, Value{std::int64_t{1990}}, Value{std::int64_t{1991}}, rule));
        MatchRule loose;
        loose.year_tolerance = 1;
        CHECK(match_value(ValueKind::Year, Value{std::int64_t{1990}}, Value{std::int64_t{1991}}, loose));
        CHECK(match_value(ValueKind::Boolean, Value{true}, Value{true}, rule));
        CHECK_FALSE(match_value(ValueKind::Boolean, Value{true}, Value{false}, rule));
        CHECK_FALSE(match_value(ValueKind::Date, Value{std::string("2001-01-01")}, Value{std::string("2001-01-02")}, rule));
        CHECK_FALSE(match_value(ValueKind::Enum, Value{std::string("Elected")}, Value{std::string("elected")}, rule));
    }

    TEST_CASE("matching is symmetric") {
        const auto rule = load_alias_table(data_file("faculty/aliases.csv"));
        const auto rows = csv::parse(data_file("faculty/aliases.csv"));
        std::vector<std::string> pool = {"", " x ", "Y", "Northfield"};
        for (std::size_t i = 1; i < rows.size(); ++i) pool.insert(pool.end(), {rows[i][0], rows[i][1]});
        for (const auto& a : pool) {
            for (const auto& b : pool) {
                CHECK(match_value(ValueKind::String, Value{a}, Value{b}, rule) ==
                      match_value(ValueKind::String, Value{b}, Value{a}, rule));
            }
        }
    }

    TEST_CASE("ground truth parsing") {
        const auto spec = parse_task_spec(data_file("nobel/task.yaml"));
        const auto truth = parse_ground_truth(data_file("nobel/truth.csv"), spec);
        CHECK(truth.rows.size() == 100);
        std::size_t not_applicable = 0;
        for (const auto& [id, cells] : truth.rows) {
            REQUIRE(cells.size() == 2);
            REQUIRE(cells[0].has_value());
            const bool alive = std::get<bool>(*cells[0]);
            CHECK(cells[1].has_value() == !alive);
            if (!cells[1]) ++not_applicable;
        }
        CHECK(not_applicable == 30);

        auto kind = [&](const std::string& text) {
            try {
                parse_ground_truth(text, spec);
            } catch (const EvalError& e) {
                return e.kind();
            }
            FAIL("accepted: " << text);
            return EvalErrorKind::EmptyTable;
        };
        const std::string header = "name,prize_year,category,is_alive,death_date\n";
        CHECK(kind(header + "A,1990,physics,false,\n") == EvalErrorKind::MissingTruth);
        CHECK(kind(header + "A,1990,physics,maybe,n/a\n") == EvalErrorKind::InvalidTruth);
        CHECK(kind(header + "A,1990,physics,true,n/a\nA,1990,physics,true,n/a\n") == EvalErrorKind::InvalidTruth);
        CHECK_THROWS_AS(parse_ground_truth("name,prize_year,category,is_alive\nA,1990,physics,true\n", spec), EvalError);
    }

    TEST_CASE("faculty evaluation matches the scripted outcomes") {
        const auto scenario = nlohmann::json::parse(data_file("faculty/scenario.json"));
        std::map<std::string, std::size_t> scripted_not_found;
        for (const auto& cell : scenario["cells"]) {
            if (cell["outcome"] == "not_found") ++scripted_not_found[cell["attribute"].get<std::string>()];
        }

        TempDir tmp;
        const auto spec = parse_task_spec(data_file("faculty/task.yaml"));
        const auto entities = parse_entity_set(data_file("faculty/entities.csv"), spec);
        ReplayProvider replay(fixtures_dir() / "faculty");
        ManualClock clock;
        run_task(spec, entities, replay, tmp.path(), {.clock = &clock});
        const auto table = compile_run(tmp.path());
        const auto truth = parse_ground_truth(data_file("faculty/truth.csv"), spec);
        const auto rule = load_alias_table(data_file("faculty/aliases.csv"));
        const auto cells = tally(table, truth, rule);

        // Scripted wrong answers: 3, 6 and 8; alias spellings count as correct.
        const std::map<std::string, std::size_t> wrong = {
            {"degree_institution", 3}, {"degree_year", 6}, {"first_hire_institution", 8}};
        for (const auto& cell : cells) {
            CAPTURE(cell.attribute);
            CHECK(cell.n_total == 100);
            CHECK(cell.n_found == 100 - scripted_not_found[cell.attribute]);
            CHECK(cell.k_correct == cell.n_found - wrong.at(cell.attribute));
        }
        CHECK(cells[0] == EvalCell{"degree_institution", 100, 95, 92});

        const auto without_aliases = tally(table, truth, MatchRule{});
        CHECK(without_aliases[0].k_correct == 92 - 4);
    }
}
