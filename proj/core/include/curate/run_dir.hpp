#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curate/error.hpp"
#include "curate/provider.hpp"
#include "curate/structured_output.hpp"
#include "curate/task_config.hpp"

namespace curate {

enum class Provenance { Model, Human };

/// Outcome of one successful curation job.
struct EntityResult {
    std::string entity_id;
    std::vector<AttributeResult> attribute_results;  // TaskSpec attribute order
    Usage usage;                                     // summed over all attempts
    int attempts = 0;
    std::string finished_at;                         // UTC ISO-8601
    Provenance provenance = Provenance::Model;
};

/// Explicit marker for an entity the engine gave up on.
struct FailedEntity {
    std::string entity_id;
    std::string reason;      // "exhausted_attempts" or "non_retryable"
    std::string last_error;
    int attempts = 0;
    Usage usage;
    std::string finished_at;
};

nlohmann::json entity_result_to_json(const EntityResult& r);
EntityResult entity_result_from_json(const nlohmann::json& j, const TaskSpec& spec);
nlohmann::json failed_entity_to_json(const FailedEntity& f);
FailedEntity failed_entity_from_json(const nlohmann::json& j);

/// Stable run identity: SHA-256 over the canonical task YAML and entity CSV.
std::string config_hash(const TaskSpec& spec, const EntitySet& entities);

std::string utc_timestamp();

enum class RunDirErrorKind { NotARunDir, ConfigHashMismatch, CorruptFile };
using RunDirError = KindedError<RunDirErrorKind>;

/// Which entities are settled in a run directory.
struct RunState {
    std::filesystem::path run_dir;
    std::set<std::string> completed;  // result file present
    std::set<std::string> failed;     // failed marker present, no result
    std::vector<std::string> pending; // neither, in entity order
};

/// Layout:
///   manifest.json                config hash, task and entity copies, timestamps
///   results/<id>.json            one EntityResult per finished entity
///   results/<id>.failed.json     marker for entities the engine gave up on
///   telemetry.jsonl              one usage line per provider call
///   overrides.csv                human review edits
///   curated.csv, curated.jsonl   compiled table
class RunDir {
public:
    explicit RunDir(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path manifest_path() const { return root_ / "manifest.json"; }
    std::filesystem::path results_dir() const { return root_ / "results"; }
    std::filesystem::path result_path(std::string_view entity_id) const;
    std::filesystem::path failed_path(std::string_view entity_id) const;
    std::filesystem::path telemetry_path() const { return root_ / "telemetry.jsonl"; }
    std::filesystem::path overrides_path() const { return root_ / "overrides.csv"; }
    std::filesystem::path curated_csv_path() const { return root_ / "curated.csv"; }
    std::filesystem::path curated_jsonl_path() const { return root_ / "curated.jsonl"; }

    bool has_manifest() const;
    nlohmann::json read_manifest() const;
    void write_manifest(const nlohmann::json& manifest) const;

    /// Creates the layout and manifest for a fresh directory, or verifies the
    /// stored hash of an existing one (ConfigHashMismatch on difference).
    void initialize(const TaskSpec& spec, const EntitySet& entities, const std::string& provider_identity) const;

    /// Task and entity set stored in the manifest; re-verifies the hash.
    std::pair<TaskSpec, EntitySet> load_config() const;

    RunState scan(const EntitySet& entities) const;

    void write_result(const EntityResult& result) const;
    void write_failed(const FailedEntity& failed) const;
    std::optional<EntityResult> read_result(std::string_view entity_id, const TaskSpec& spec) const;
    std::optional<FailedEntity> read_failed(std::string_view entity_id) const;

private:
    std::filesystem::path root_;
};

/// One line of telemetry.jsonl.
struct TelemetryLine {
    std::string entity_id;
    int attempt = 0;
    std::string model_id;
    bool search_tool_declared = false;
    Usage usage;
    std::string outcome;  // "ok" or the failure kind

    nlohmann::json to_json() const;
    static TelemetryLine from_json(const nlohmann::json& j);
};

std::vector<TelemetryLine> read_telemetry(const std::filesystem::path& path);

/// Appends telemetry lines from many threads.
class TelemetryWriter {
public:
    explicit TelemetryWriter(std::filesystem::path path) : path_(std::move(path)) {}
    void append(const TelemetryLine& line);

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

}  // namespace curate
