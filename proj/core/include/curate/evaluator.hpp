#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "curate/compiler.hpp"
#include "curate/error.hpp"
#include "curate/task_config.hpp"
#include "curate/value.hpp"

namespace curate {

enum class EvalErrorKind { MissingTruth, InvalidTruth, EmptyTable, EmptyDenominator, InvalidArgs };

using EvalError = KindedError<EvalErrorKind>;

/// Case-folds ASCII letters, trims, and collapses runs of whitespace to one space.
std::string normalize_text(std::string_view text);

/// Comparison rules. Strings compare after normalization and alias lookup;
/// everything else compares exactly (years within `year_tolerance`).
struct MatchRule {
    std::map<std::string, std::string, std::less<>> aliases;  // normalized variant -> normalized canonical
    std::int64_t year_tolerance = 0;

    std::string canonical(std::string_view text) const;
};

/// Reads a `variant,canonical` CSV (header required).
MatchRule load_alias_table(std::string_view csv_text);

bool match_value(ValueKind kind, const Value& predicted, const Value& truth, const MatchRule& rule);

/// Truth per entity and attribute. A cell holding "n/a" marks the attribute
/// as not applicable to that entity (e.g. a death date for a living person);
/// such cells are left out of every tally. Empty cells are rejected.
struct GroundTruth {
    std::vector<std::string> attributes;
    std::map<std::string, std::vector<std::optional<Value>>, std::less<>> rows;
};

inline constexpr std::string_view kNotApplicable = "n/a";

GroundTruth parse_ground_truth(std::string_view csv_text, const TaskSpec& spec);

struct EvalCell {
    std::string attribute;
    std::size_t n_total = 0;  // entities with an applicable truth value
    std::size_t n_found = 0;  // of those, predicted with status found
    std::size_t k_correct = 0;

    friend bool operator==(const EvalCell&, const EvalCell&) = default;
};

/// Counts per attribute. Failed and not_found cells count toward n_total
/// only. Throws MissingTruth for a curated entity absent from the truth and
/// EmptyTable for a table without rows.
std::vector<EvalCell> tally(const CuratedTable& curated, const GroundTruth& truth, const MatchRule& rule);

enum class Regime { IncludeNotFound, FoundOnly };

std::string_view to_string(Regime regime);

/// IncludeNotFound: k / n_total. FoundOnly: k / n_found.
double accuracy(const EvalCell& cell, Regime regime);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Exact binomial interval by bisection on log-space binomial tail sums to
/// an absolute tolerance below 1e-10. lo = 0 when k = 0, hi = 1 when k = n,
/// and lo <= k/n <= hi always.
Interval clopper_pearson(std::size_t k, std::size_t n, double alpha);

struct EvalEntry {
    std::string attribute;
    Regime regime = Regime::IncludeNotFound;
    std::size_t k = 0;
    std::size_t n = 0;
    std::optional<double> accuracy;  // empty when n == 0 ("undefined")
    std::optional<Interval> ci;
};

struct EvalReport {
    double alpha = 0.05;
    std::vector<EvalCell> cells;
    std::vector<EvalEntry> entries;  // attribute order, include regime first
    std::vector<std::string> annotations;

    const EvalEntry* find(std::string_view attribute, Regime regime) const;
};

EvalReport evaluate(const CuratedTable& curated, const GroundTruth& truth, const MatchRule& rule, double alpha);

nlohmann::json eval_report_to_json(const EvalReport& report);
std::string render_eval_report(const EvalReport& report);

/// Shortest of "%.4f" with trailing zeros removed, keeping one decimal.
std::string format_fraction(double value);

}  // namespace curate
