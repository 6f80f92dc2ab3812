#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curate/error.hpp"
#include "curate/money.hpp"
#include "curate/provider.hpp"
#include "curate/run_dir.hpp"
#include "curate/task_config.hpp"

namespace curate {

struct CostRecord {
    std::string entity_id;
    Money input_cost;
    Money output_cost;
    Money search_cost;
    Money total;  // input_cost + output_cost + search_cost
};

/// Money for one usage sample. Token costs are tokens × price-per-million /
/// 10^6 rounded half-up to whole micro-dollars, per component.
CostRecord cost_of(const Usage& usage, const PricingTable& pricing, std::string entity_id = {});

inline constexpr double kSearchDominanceThreshold = 0.9;

struct CostReport {
    std::size_t n = 0;
    Money mean;    // total / n, rounded half-up to micro-dollars
    Money median;  // nearest rank on sorted totals
    Money p90;     // nearest rank on sorted totals
    Money total;
    Money input_total;
    Money output_total;
    Money search_total;
    double search_share = 0.0;  // search_total / total, 0 when total is 0
    Money human_baseline_per_record;

    bool search_dominant() const { return search_share > kSearchDominanceThreshold; }
};

/// Nearest-rank percentile of an ascending list: element ceil(p*n) (1-based).
Money nearest_rank(const std::vector<Money>& sorted, double p);

CostReport aggregate(const std::vector<CostRecord>& records);

class DivisionByZeroRecords : public Error {
public:
    DivisionByZeroRecords() : Error("human baseline needs records_per_hour > 0") {}
};

/// wage / records_per_hour in micro-dollars, truncated.
Money human_baseline(Money wage_per_hour, std::int64_t records_per_hour);

/// Sums telemetry per entity (first-seen order) and prices each entity.
std::vector<CostRecord> cost_records_from_telemetry(const std::vector<TelemetryLine>& lines,
                                                    const PricingTable& pricing);

nlohmann::json cost_report_to_json(const CostReport& report, Money wage_per_hour, std::int64_t records_per_hour);

/// Aligned-text rendering of the report.
std::string render_cost_report(const CostReport& report, Money wage_per_hour, std::int64_t records_per_hour);

}  // namespace curate
