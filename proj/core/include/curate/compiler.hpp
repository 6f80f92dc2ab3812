#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/error.hpp"
#include "curate/structured_output.hpp"
#include "curate/task_config.hpp"
#include "curate/value.hpp"

namespace curate {

enum class CellStatus { Found, NotFound, Failed };
enum class CellProvenance { Model, Human, Failed };

std::string_view to_string(CellStatus s);
std::string_view to_string(CellProvenance p);

struct CuratedCell {
    CellStatus status = CellStatus::Failed;
    std::optional<Value> value;  // present iff status == Found
    CellProvenance provenance = CellProvenance::Failed;

    friend bool operator==(const CuratedCell&, const CuratedCell&) = default;
};

struct CuratedRow {
    std::string entity_id;
    std::vector<std::string> key_values;
    std::vector<CuratedCell> cells;  // one per attribute, attribute order

    friend bool operator==(const CuratedRow&, const CuratedRow&) = default;
};

/// The unified table: one row per entity in input order. Flat CSV columns
/// are the key columns followed by `<attr>`, `<attr>__status` and
/// `<attr>__provenance` for every attribute.
struct CuratedTable {
    std::vector<std::string> key_columns;
    std::vector<AttributeSpec> attributes;
    std::vector<CuratedRow> rows;

    std::vector<std::string> header() const;
    const CuratedRow* find_row(std::string_view entity_id) const;
    std::optional<std::size_t> attribute_index(std::string_view name) const;

    friend bool operator==(const CuratedTable&, const CuratedTable&) = default;
};

enum class CompileErrorKind {
    IncompleteRun,
    UnknownEntity,
    UnknownAttribute,
    DuplicateOverride,
    InvalidOverride,
    MalformedTable,
};

using CompileError = KindedError<CompileErrorKind>;

class IncompleteRun : public CompileError {
public:
    explicit IncompleteRun(std::vector<std::string> missing);
    const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

/// Builds the table from a settled run directory. Throws IncompleteRun
/// listing entities with neither a result nor a failed marker, and
/// RunDirError(ConfigHashMismatch) when the manifest is inconsistent.
CuratedTable compile_run(const std::filesystem::path& run_dir);

struct Override {
    std::string entity_id;
    std::string attribute;
    AttributeStatus status = AttributeStatus::Found;
    std::optional<Value> value;

    friend bool operator==(const Override&, const Override&) = default;
};

using OverrideSet = std::vector<Override>;

/// Reads `entity_id,attribute,status,value` rows and validates them against
/// the table (UnknownEntity, UnknownAttribute, DuplicateOverride, InvalidOverride).
OverrideSet parse_overrides_csv(std::string_view text, const CuratedTable& table);
std::string serialize_overrides(const OverrideSet& overrides);
void validate_overrides(const OverrideSet& overrides, const CuratedTable& table);

/// Replaces exactly the named cells with human-provenance values.
CuratedTable apply_overrides(CuratedTable table, const OverrideSet& overrides);

std::string curated_to_csv(const CuratedTable& table);
std::string curated_to_jsonl(const CuratedTable& table);

/// Reads a curated CSV back, typed by the task's attributes.
CuratedTable curated_from_csv(std::string_view text, const TaskSpec& spec);

struct CompileOutcome {
    CuratedTable table;
    std::size_t overrides_applied = 0;
    std::size_t done = 0;
    std::size_t failed = 0;
};

/// compile_run, then overrides.csv (when present), then curated.csv,
/// curated.jsonl and the manifest's "compiled" section.
CompileOutcome compile_and_write(const std::filesystem::path& run_dir);

}  // namespace curate
