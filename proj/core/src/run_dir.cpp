#include "curate/run_dir.hpp"

#include <ctime>
#include <fstream>

#include "curate/fs_util.hpp"
#include "curate/hash.hpp"

namespace curate {

namespace fs = std::filesystem;

namespace {

using Kind = RunDirErrorKind;

std::string_view to_string(Provenance p) { return p == Provenance::Model ? "model" : "human"; }

nlohmann::json read_json_file(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw RunDirError(Kind::CorruptFile, path.string(), "corrupt JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string config_hash(const TaskSpec& spec, const EntitySet& entities) {
    std::string canonical = serialize_task_spec(spec);
    canonical.push_back('\x1e');
    canonical += serialize_entity_set(entities);
    return sha256_hex(canonical);
}

nlohmann::json entity_result_to_json(const EntityResult& r) {
    nlohmann::json attrs = nlohmann::json::object();
    for (const auto& a : r.attribute_results) attrs[a.attribute] = attribute_result_to_json(a);
    return {
        {"entity_id", r.entity_id},
        {"provenance", std::string(to_string(r.provenance))},
        {"attempts", r.attempts},
        {"usage", usage_to_json(r.usage)},
        {"finished_at", r.finished_at},
        {"attributes", std::move(attrs)},
    };
}

EntityResult entity_result_from_json(const nlohmann::json& j, const TaskSpec& spec) {
    EntityResult r;
    r.entity_id = j.at("entity_id").get<std::string>();
    r.provenance = j.value("provenance", "model") == "human" ? Provenance::Human : Provenance::Model;
    r.attempts = j.at("attempts").get<int>();
    r.usage = usage_from_json(j.at("usage"));
    r.finished_at = j.value("finished_at", "");
    const auto& attrs = j.at("attributes");
    for (const auto& a : spec.attributes) {
        if (!attrs.contains(a.name)) {
            throw RunDirError(Kind::CorruptFile, r.entity_id, "result for '" + r.entity_id + "' lacks attribute " + a.name);
        }
        r.attribute_results.push_back(attribute_result_from_json(a.name, attrs.at(a.name), a));
    }
    return r;
}

nlohmann::json failed_entity_to_json(const FailedEntity& f) {
    return {
        {"entity_id", f.entity_id},
        {"status", "failed"},
        {"reason", f.reason},
        {"last_error", f.last_error},
        {"attempts", f.attempts},
        {"usage", usage_to_json(f.usage)},
        {"finished_at", f.finished_at},
    };
}

FailedEntity failed_entity_from_json(const nlohmann::json& j) {
    FailedEntity f;
    f.entity_id = j.at("entity_id").get<std::string>();
    f.reason = j.value("reason", "");
    f.last_error = j.value("last_error", "");
    f.attempts = j.value("attempts", 0);
    if (j.contains("usage")) f.usage = usage_from_json(j.at("usage"));
    f.finished_at = j.value("finished_at", "");
    return f;
}

fs::path RunDir::result_path(std::string_view entity_id) const {
    return results_dir() / (encode_file_stem(entity_id) + ".json");
}

fs::path RunDir::failed_path(std::string_view entity_id) const {
    return results_dir() / (encode_file_stem(entity_id) + ".failed.json");
}

bool RunDir::has_manifest() const { return fs::is_regular_file(manifest_path()); }

nlohmann::json RunDir::read_manifest() const {
    if (!has_manifest()) {
        throw RunDirError(Kind::NotARunDir, root_.string(), "no manifest.json in " + root_.string());
    }
    return read_json_file(manifest_path());
}

void RunDir::write_manifest(const nlohmann::json& manifest) const {
    write_file_atomic(manifest_path(), manifest.dump(2) + "\n");
}

void RunDir::initialize(const TaskSpec& spec, const EntitySet& entities, const std::string& provider_identity) const {
    const auto hash = config_hash(spec, entities);
    if (has_manifest()) {
        auto manifest = read_manifest();
        const auto stored = manifest.value("config_hash", "");
        if (stored != hash) {
            throw RunDirError(Kind::ConfigHashMismatch, root_.string(),
                              "run directory " + root_.string() + " was created for config " + stored +
                                  ", not " + hash);
        }
        manifest["provider"] = provider_identity;
        manifest["updated_at"] = utc_timestamp();
        write_manifest(manifest);
    } else {
        const auto now = utc_timestamp();
        write_manifest({
            {"format", 1},
            {"config_hash", hash},
            {"task_name", spec.task_name},
            {"task_yaml", serialize_task_spec(spec)},
            {"entities_csv", serialize_entity_set(entities)},
            {"entity_count", entities.rows.size()},
            {"provider", provider_identity},
            {"created_at", now},
            {"updated_at", now},
        });
    }
    fs::create_directories(results_dir());
}

std::pair<TaskSpec, EntitySet> RunDir::load_config() const {
    const auto manifest = read_manifest();
    TaskSpec spec = parse_task_spec(manifest.at("task_yaml").get<std::string>());
    EntitySet entities = parse_entity_set(manifest.at("entities_csv").get<std::string>(), spec);
    const auto hash = config_hash(spec, entities);
    if (manifest.value("config_hash", "") != hash) {
        throw RunDirError(Kind::ConfigHashMismatch, root_.string(),
                          "manifest in " + root_.string() + " does not match its stored configuration");
    }
    return {std::move(spec), std::move(entities)};
}

RunState RunDir::scan(const EntitySet& entities) const {
    RunState state;
    state.run_dir = root_;
    for (const auto& rec : entities.rows) {
        if (fs::is_regular_file(result_path(rec.entity_id))) {
            state.completed.insert(rec.entity_id);
        } else if (fs::is_regular_file(failed_path(rec.entity_id))) {
            state.failed.insert(rec.entity_id);
        } else {
            state.pending.push_back(rec.entity_id);
        }
    }
    return state;
}

void RunDir::write_result(const EntityResult& result) const {
    write_file_atomic(result_path(result.entity_id), entity_result_to_json(result).dump(2) + "\n");
    std::error_code ec;
    fs::remove(failed_path(result.entity_id), ec);
}

void RunDir::write_failed(const FailedEntity& failed) const {
    write_file_atomic(failed_path(failed.entity_id), failed_entity_to_json(failed).dump(2) + "\n");
}

std::optional<EntityResult> RunDir::read_result(std::string_view entity_id, const TaskSpec& spec) const {
    const auto path = result_path(entity_id);
    if (!fs::is_regular_file(path)) return std::nullopt;
    try {
        return entity_result_from_json(read_json_file(path), spec);
    } catch (const RunDirError&) {
        throw;
    } catch (const std::exception& e) {
        throw RunDirError(Kind::CorruptFile, path.string(), "invalid result file " + path.string() + ": " + e.what());
    }
}

std::optional<FailedEntity> RunDir::read_failed(std::string_view entity_id) const {
    const auto path = failed_path(entity_id);
    if (!fs::is_regular_file(path)) return std::nullopt;
    return failed_entity_from_json(read_json_file(path));
}

nlohmann::json TelemetryLine::to_json() const {
    return {
        {"entity_id", entity_id},
        {"attempt", attempt},
        {"model_id", model_id},
        {"search_tool_declared", search_tool_declared},
        {"input_tokens", usage.input_tokens},
        {"output_tokens", usage.output_tokens},
        {"search_calls", usage.search_calls},
        {"outcome", outcome},
    };
}

TelemetryLine TelemetryLine::from_json(const nlohmann::json& j) {
    TelemetryLine t;
    t.entity_id = j.at("entity_id").get<std::string>();
    t.attempt = j.value("attempt", 0);
    t.model_id = j.value("model_id", "");
    t.search_tool_declared = j.value("search_tool_declared", false);
    t.usage = usage_from_json(j);
    t.outcome = j.value("outcome", "");
    return t;
}

std::vector<TelemetryLine> read_telemetry(const fs::path& path) {
    std::vector<TelemetryLine> lines;
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            lines.push_back(TelemetryLine::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw IoError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return lines;
}

void TelemetryWriter::append(const TelemetryLine& line) {
    const auto text = line.to_json().dump() + "\n";
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + path_.string());
    out << text;
    out.flush();
}

}  // namespace curate
