#include "curate/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace curate {

namespace {

__extension__ using Wide = __int128;

Money per_million(std::int64_t tokens, Money price_per_million) {
    const Wide product = static_cast<Wide>(tokens) * price_per_million.micros();
    return Money::from_micros(static_cast<std::int64_t>((product + 500'000) / 1'000'000));
}

std::string percent(double share) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", share * 100.0);
    return buf;
}

}  // namespace

CostRecord cost_of(const Usage& usage, const PricingTable& pricing, std::string entity_id) {
    CostRecord r;
    r.entity_id = std::move(entity_id);
    r.input_cost = per_million(usage.input_tokens, pricing.input_per_million_tokens);
    r.output_cost = per_million(usage.output_tokens, pricing.output_per_million_tokens);
    r.search_cost = Money::from_micros(usage.search_calls * pricing.per_search_call.micros());
    r.total = r.input_cost + r.output_cost + r.search_cost;
    return r;
}

Money nearest_rank(const std::vector<Money>& sorted, double p) {
    if (sorted.empty()) return {};
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

CostReport aggregate(const std::vector<CostRecord>& records) {
    CostReport report;
    report.n = records.size();
    if (records.empty()) return report;

    std::vector<Money> totals;
    totals.reserve(records.size());
    for (const auto& r : records) {
        report.input_total += r.input_cost;
        report.output_total += r.output_cost;
        report.search_total += r.search_cost;
        report.total += r.total;
        totals.push_back(r.total);
    }
    std::sort(totals.begin(), totals.end());
    const auto n = static_cast<std::int64_t>(records.size());
    report.mean = Money::from_micros((report.total.micros() + n / 2) / n);
    report.median = nearest_rank(totals, 0.5);
    report.p90 = nearest_rank(totals, 0.9);
    report.search_share = report.total.micros() > 0
                              ? static_cast<double>(report.search_total.micros()) / static_cast<double>(report.total.micros())
                              : 0.0;
    return report;
}

Money human_baseline(Money wage_per_hour, std::int64_t records_per_hour) {
    if (records_per_hour <= 0) throw DivisionByZeroRecords();
    return Money::from_micros(wage_per_hour.micros() / records_per_hour);
}

std::vector<CostRecord> cost_records_from_telemetry(const std::vector<TelemetryLine>& lines, const PricingTable& pricing) {
    std::vector<std::string> order;
    std::map<std::string, Usage> sums;
    for (const auto& line : lines) {
        auto [it, inserted] = sums.try_emplace(line.entity_id);
        if (inserted) order.push_back(line.entity_id);
        it->second += line.usage;
    }
    std::vector<CostRecord> records;
    records.reserve(order.size());
    for (const auto& id : order) records.push_back(cost_of(sums.at(id), pricing, id));
    return records;
}

nlohmann::json cost_report_to_json(const CostReport& r, Money wage_per_hour, std::int64_t records_per_hour) {
    auto money = [](Money m) { return nlohmann::json{{"micro_dollars", m.micros()}, {"display", m.to_cents()}}; };
    nlohmann::json human = {
        {"wage_per_hour", money(wage_per_hour)},
        {"records_per_hour", records_per_hour},
        {"per_record", {{"micro_dollars", r.human_baseline_per_record.micros()},
                        {"display_floor", r.human_baseline_per_record.to_cents_floor()},
                        {"display_rounded", r.human_baseline_per_record.to_cents()}}},
    };
    return {
        {"n", r.n},
        {"mean", money(r.mean)},
        {"median", money(r.median)},
        {"p90", money(r.p90)},
        {"total", money(r.total)},
        {"input_total", money(r.input_total)},
        {"output_total", money(r.output_total)},
        {"search_total", money(r.search_total)},
        {"search_share", r.search_share},
        {"search_dominant", r.search_dominant()},
        {"human_baseline", std::move(human)},
    };
}

std::string render_cost_report(const CostReport& r, Money wage_per_hour, std::int64_t records_per_hour) {
    std::ostringstream out;
    auto row = [&](const std::string& label, const std::string& value) {
        out << "  " << label << std::string(label.size() < 22 ? 22 - label.size() : 1, ' ') << value << "\n";
    };
    out << "Cost report\n";
    row("records", std::to_string(r.n));
    row("total", r.total.to_cents() + "  (" + r.total.to_micros_string() + ")");
    row("mean per record", r.mean.to_cents() + "  (" + r.mean.to_micros_string() + ")");
    row("median per record", r.median.to_cents());
    row("p90 per record", r.p90.to_cents());
    row("input tokens", r.input_total.to_cents());
    row("output tokens", r.output_total.to_cents());
    row("web search", r.search_total.to_cents());
    row("search share", percent(r.search_share));
    row("human baseline", r.human_baseline_per_record.to_cents_floor() + " per record (" + wage_per_hour.to_cents() +
                              "/h at " + std::to_string(records_per_hour) + " records/h; rounded " +
                              r.human_baseline_per_record.to_cents() + ")");
    if (r.search_dominant()) out << "  web search is the dominant cost driver (>90% of total)\n";
    return out.str();
}

}  // namespace curate
