#include "curate/compiler.hpp"

#include <algorithm>
#include <set>

#include "curate/csv.hpp"
#include "curate/fs_util.hpp"
#include "curate/ledger.hpp"
#include "curate/run_dir.hpp"

namespace curate {

namespace fs = std::filesystem;

namespace {

using Kind = CompileErrorKind;

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < 10; ++i) out += (i ? ", " : "") + ids[i];
    if (ids.size() > 10) out += ", ... (" + std::to_string(ids.size()) + " total)";
    return out;
}

}  // namespace

std::string_view to_string(CellStatus s) {
    switch (s) {
        case CellStatus::Found: return "found";
        case CellStatus::NotFound: return "not_found";
        case CellStatus::Failed: return "failed";
    }
    return "failed";
}

std::string_view to_string(CellProvenance p) {
    switch (p) {
        case CellProvenance::Model: return "model";
        case CellProvenance::Human: return "human";
        case CellProvenance::Failed: return "failed";
    }
    return "failed";
}

IncompleteRun::IncompleteRun(std::vector<std::string> missing)
    : CompileError(Kind::IncompleteRun, missing.empty() ? std::string() : missing.front(),
                   "run is incomplete; " + std::to_string(missing.size()) + " entities unsettled: " + join_ids(missing)),
      missing_(std::move(missing)) {}

std::vector<std::string> CuratedTable::header() const {
    std::vector<std::string> h = key_columns;
    for (const auto& a : attributes) {
        h.push_back(a.name);
        h.push_back(a.name + "__status");
        h.push_back(a.name + "__provenance");
    }
    return h;
}

const CuratedRow* CuratedTable::find_row(std::string_view entity_id) const {
    for (const auto& r : rows) {
        if (r.entity_id == entity_id) return &r;
    }
    return nullptr;
}

std::optional<std::size_t> CuratedTable::attribute_index(std::string_view name) const {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (attributes[i].name == name) return i;
    }
    return std::nullopt;
}

CuratedTable compile_run(const fs::path& run_dir) {
    const RunDir dir(run_dir);
    auto [spec, entities] = dir.load_config();

    CuratedTable table;
    table.key_columns = spec.entity_key_columns;
    table.attributes = spec.attributes;

    std::vector<std::string> missing;
    for (const auto& rec : entities.rows) {
        CuratedRow row;
        row.entity_id = rec.entity_id;
        for (const auto& k : spec.entity_key_columns) row.key_values.push_back(rec.at(k));

        if (auto result = dir.read_result(rec.entity_id, spec)) {
            const auto provenance = result->provenance == Provenance::Human ? CellProvenance::Human : CellProvenance::Model;
            for (const auto& a : result->attribute_results) {
                row.cells.push_back(CuratedCell{
                    a.status == AttributeStatus::Found ? CellStatus::Found : CellStatus::NotFound,
                    a.value,
                    provenance,
                });
            }
        } else if (fs::is_regular_file(dir.failed_path(rec.entity_id))) {
            row.cells.assign(spec.attributes.size(), CuratedCell{CellStatus::Failed, std::nullopt, CellProvenance::Failed});
        } else {
            missing.push_back(rec.entity_id);
            continue;
        }
        table.rows.push_back(std::move(row));
    }
    if (!missing.empty()) throw IncompleteRun(std::move(missing));
    return table;
}

void validate_overrides(const OverrideSet& overrides, const CuratedTable& table) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& o : overrides) {
        if (table.find_row(o.entity_id) == nullptr) {
            throw CompileError(Kind::UnknownEntity, o.entity_id, "override names unknown entity '" + o.entity_id + "'");
        }
        const auto idx = table.attribute_index(o.attribute);
        if (!idx) {
            throw CompileError(Kind::UnknownAttribute, o.attribute, "override names unknown attribute '" + o.attribute + "'");
        }
        if (!seen.emplace(o.entity_id, o.attribute).second) {
            throw CompileError(Kind::DuplicateOverride, o.entity_id + "/" + o.attribute,
                               "duplicate override for (" + o.entity_id + ", " + o.attribute + ")");
        }
        if ((o.status == AttributeStatus::Found) != o.value.has_value()) {
            throw CompileError(Kind::InvalidOverride, o.entity_id + "/" + o.attribute,
                               "override for (" + o.entity_id + ", " + o.attribute + ") must carry a value iff found");
        }
    }
}

OverrideSet parse_overrides_csv(std::string_view text, const CuratedTable& table) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::parse(text);
    } catch (const csv::ParseError& e) {
        throw CompileError(Kind::InvalidOverride, "", std::string("overrides: ") + e.what());
    }
    const csv::Row expected{"entity_id", "attribute", "status", "value"};
    if (rows.empty() || rows.front() != expected) {
        throw CompileError(Kind::InvalidOverride, "", "overrides header must be entity_id,attribute,status,value");
    }
    OverrideSet out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() == 1 && r.front().empty()) continue;
        if (r.size() != 4) throw CompileError(Kind::InvalidOverride, "", "overrides record " + std::to_string(i) + " needs 4 fields");
        Override o{r[0], r[1], AttributeStatus::Found, std::nullopt};
        const auto idx = table.attribute_index(o.attribute);
        if (!idx) throw CompileError(Kind::UnknownAttribute, o.attribute, "override names unknown attribute '" + o.attribute + "'");
        if (r[2] == "not_found") {
            o.status = AttributeStatus::NotFound;
            if (!r[3].empty()) throw CompileError(Kind::InvalidOverride, o.entity_id + "/" + o.attribute, "not_found override with a value");
        } else if (r[2] == "found") {
            const auto& attr = table.attributes[*idx];
            Value v;
            if (auto err = value_from_text(attr.value_kind, attr.enum_choices, r[3], v)) {
                throw CompileError(Kind::InvalidOverride, o.entity_id + "/" + o.attribute,
                                   "override for (" + o.entity_id + ", " + o.attribute + "): " + *err);
            }
            o.value = std::move(v);
        } else {
            throw CompileError(Kind::InvalidOverride, o.entity_id + "/" + o.attribute, "override status must be found or not_found");
        }
        out.push_back(std::move(o));
    }
    validate_overrides(out, table);
    return out;
}

std::string serialize_overrides(const OverrideSet& overrides) {
    std::string out = csv::format_row({"entity_id", "attribute", "status", "value"});
    for (const auto& o : overrides) {
        out += csv::format_row({o.entity_id, o.attribute, std::string(to_string(o.status)),
                                o.value ? value_to_text(*o.value) : std::string()});
    }
    return out;
}

CuratedTable apply_overrides(CuratedTable table, const OverrideSet& overrides) {
    validate_overrides(overrides, table);
    for (const auto& o : overrides) {
        auto row = std::find_if(table.rows.begin(), table.rows.end(), [&](const CuratedRow& r) { return r.entity_id == o.entity_id; });
        auto& cell = row->cells[*table.attribute_index(o.attribute)];
        cell.status = o.status == AttributeStatus::Found ? CellStatus::Found : CellStatus::NotFound;
        cell.value = o.value;
        cell.provenance = CellProvenance::Human;
    }
    return table;
}

std::string curated_to_csv(const CuratedTable& table) {
    std::string out = csv::format_row(table.header());
    for (const auto& row : table.rows) {
        csv::Row r = row.key_values;
        for (const auto& cell : row.cells) {
            r.push_back(cell.value ? value_to_text(*cell.value) : std::string());
            r.emplace_back(to_string(cell.status));
            r.emplace_back(to_string(cell.provenance));
        }
        out += csv::format_row(r);
    }
    return out;
}

std::string curated_to_jsonl(const CuratedTable& table) {
    std::string out;
    for (const auto& row : table.rows) {
        nlohmann::json key = nlohmann::json::object();
        for (std::size_t i = 0; i < table.key_columns.size(); ++i) key[table.key_columns[i]] = row.key_values[i];
        nlohmann::json attrs = nlohmann::json::object();
        for (std::size_t i = 0; i < table.attributes.size(); ++i) {
            const auto& cell = row.cells[i];
            attrs[table.attributes[i].name] = {
                {"value", cell.value ? value_to_json(*cell.value) : nlohmann::json(nullptr)},
                {"status", std::string(to_string(cell.status))},
                {"provenance", std::string(to_string(cell.provenance))},
            };
        }
        out += nlohmann::json{{"entity_id", row.entity_id}, {"key", std::move(key)}, {"attributes", std::move(attrs)}}.dump();
        out.push_back('\n');
    }
    return out;
}

CuratedTable curated_from_csv(std::string_view text, const TaskSpec& spec) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::parse(text);
    } catch (const csv::ParseError& e) {
        throw CompileError(Kind::MalformedTable, "", std::string("curated table: ") + e.what());
    }
    CuratedTable table;
    table.key_columns = spec.entity_key_columns;
    table.attributes = spec.attributes;
    if (rows.empty() || rows.front() != table.header()) {
        throw CompileError(Kind::MalformedTable, "", "curated table header does not match the task's columns");
    }
    const auto n_keys = table.key_columns.size();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() == 1 && r.front().empty()) continue;
        if (r.size() != rows.front().size()) {
            throw CompileError(Kind::MalformedTable, "", "curated record " + std::to_string(i) + " has the wrong field count");
        }
        CuratedRow row;
        row.key_values.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(n_keys));
        row.entity_id = make_entity_id(row.key_values);
        for (std::size_t a = 0; a < table.attributes.size(); ++a) {
            const auto& attr = table.attributes[a];
            const auto& value_text = r[n_keys + 3 * a];
            const auto& status_text = r[n_keys + 3 * a + 1];
            const auto& prov_text = r[n_keys + 3 * a + 2];
            CuratedCell cell;
            if (status_text == "found") cell.status = CellStatus::Found;
            else if (status_text == "not_found") cell.status = CellStatus::NotFound;
            else if (status_text == "failed") cell.status = CellStatus::Failed;
            else throw CompileError(Kind::MalformedTable, row.entity_id, "bad status '" + status_text + "' for " + row.entity_id);
            if (prov_text == "model") cell.provenance = CellProvenance::Model;
            else if (prov_text == "human") cell.provenance = CellProvenance::Human;
            else if (prov_text == "failed") cell.provenance = CellProvenance::Failed;
            else throw CompileError(Kind::MalformedTable, row.entity_id, "bad provenance '" + prov_text + "' for " + row.entity_id);
            if (cell.status == CellStatus::Found) {
                Value v;
                if (auto err = value_from_text(attr.value_kind, attr.enum_choices, value_text, v)) {
                    throw CompileError(Kind::MalformedTable, row.entity_id, row.entity_id + "/" + attr.name + ": " + *err);
                }
                cell.value = std::move(v);
            } else if (!value_text.empty()) {
                throw CompileError(Kind::MalformedTable, row.entity_id, row.entity_id + "/" + attr.name + ": value without found status");
            }
            row.cells.push_back(std::move(cell));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

CompileOutcome compile_and_write(const fs::path& run_dir) {
    const RunDir dir(run_dir);
    CompileOutcome outcome;
    outcome.table = compile_run(run_dir);
    for (const auto& row : outcome.table.rows) {
        const bool failed = !row.cells.empty() && row.cells.front().provenance == CellProvenance::Failed &&
                            std::all_of(row.cells.begin(), row.cells.end(), [](const CuratedCell& c) { return c.status == CellStatus::Failed; });
        ++(failed ? outcome.failed : outcome.done);
    }
    if (fs::is_regular_file(dir.overrides_path())) {
        const auto overrides = parse_overrides_csv(read_text_file(dir.overrides_path()), outcome.table);
        outcome.table = apply_overrides(std::move(outcome.table), overrides);
        outcome.overrides_applied = overrides.size();
    }
    write_file_atomic(dir.curated_csv_path(), curated_to_csv(outcome.table));
    write_file_atomic(dir.curated_jsonl_path(), curated_to_jsonl(outcome.table));

    auto manifest = dir.read_manifest();
    const auto [spec, entities] = dir.load_config();
    Money total_cost;
    if (fs::is_regular_file(dir.telemetry_path())) {
        for (const auto& r : cost_records_from_telemetry(read_telemetry(dir.telemetry_path()), spec.pricing)) total_cost += r.total;
    }
    manifest["updated_at"] = utc_timestamp();
    manifest["compiled"] = {
        {"rows", outcome.table.rows.size()},
        {"done", outcome.done},
        {"failed", outcome.failed},
        {"overrides_applied", outcome.overrides_applied},
        {"total_cost_micro_dollars", total_cost.micros()},
        {"total_cost", total_cost.to_cents()},
        {"compiled_at", utc_timestamp()},
    };
    dir.write_manifest(manifest);
    return outcome;
}

}  // namespace curate
