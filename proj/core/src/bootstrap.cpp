#include "curate/bootstrap.hpp"

#include <set>
#include <sstream>

#include "curate/csv.hpp"
#include "curate/fs_util.hpp"

namespace curate {

namespace {

constexpr std::string_view kKeyReferenceHeading = "YAML key reference";
constexpr std::size_t kSampleRows = 5;

constexpr std::string_view kConfigInstructions =
    "You write task descriptors for the curation pipeline documented above.\n"
    "Follow the YAML key reference exactly. Every entity_key_columns entry and every\n"
    "placeholder must name a column of the entity table shown by the user.\n"
    "Reply with exactly one fenced code block tagged yaml holding the whole task.yaml.\n";

constexpr std::string_view kEntityInstructions =
    "You assemble entity tables for the curation pipeline documented above.\n"
    "Search the web for an authoritative list of the entities the user asks for.\n"
    "Reply with exactly one fenced code block tagged csv: a header row, then one row per\n"
    "entity. The first column must identify each entity uniquely.\n";

std::string table_excerpt(const std::vector<csv::Row>& rows) {
    std::ostringstream out;
    out << "Entity table header:\n" << csv::format_row(rows.front());
    const auto n = std::min(rows.size() - 1, kSampleRows);
    if (n > 0) {
        out << "Sample rows (" << n << " of " << rows.size() - 1 << "):\n";
        for (std::size_t i = 1; i <= n; ++i) out << csv::format_row(rows[i]);
    }
    return out.str();
}

std::string user_prompt(std::string_view request, const std::string& context, const std::string* rejection,
                        std::string_view tag) {
    std::ostringstream out;
    out << "Request:\n" << request << "\n";
    if (!context.empty()) out << "\n" << context;
    if (rejection) {
        out << "\nYour previous draft was rejected: " << *rejection << "\nFix the problem and reply again with one ```"
            << tag << " block.\n";
    }
    return out.str();
}

CurationRequest make_request(const BootstrapOptions& options, const Playbook& playbook,
                             std::string_view instructions, std::string user, bool search) {
    CurationRequest r;
    r.model_id = options.model_id;
    r.system = playbook.text + "\n\n" + std::string(instructions);
    r.user = std::move(user);
    r.search_enabled = search;
    r.max_output_tokens = options.max_output_tokens;
    return r;
}

std::vector<csv::Row> parse_raw_table(std::string_view text) {
    auto rows = csv::parse(text);
    std::erase_if(rows, [](const csv::Row& r) { return r.size() == 1 && r.front().empty(); });
    return rows;
}

struct ConfigDraft {
    std::string yaml;
    TaskSpec spec;
    EntitySet entities;
};

// Runs the descriptor phase against a fixed entity table.
ConfigDraft generate_config(std::string_view request, const Playbook& playbook, std::string_view entity_csv,
                            const std::vector<csv::Row>& rows, Provider& provider, const BootstrapOptions& options,
                            BootstrapResult& result) {
    const auto context = table_excerpt(rows);
    std::optional<std::string> rejection;
    for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
        ++result.config_attempts;
        ++result.attempts_used;
        auto req = make_request(options, playbook, kConfigInstructions,
                                user_prompt(request, context, rejection ? &*rejection : nullptr, "yaml"), false);
        const auto reply = provider.send(req).raw_text;
        std::string reason;
        if (auto yaml = extract_fenced_block(reply, "yaml")) {
            try {
                auto spec = parse_task_spec(*yaml);
                auto entities = parse_entity_set(entity_csv, spec);
                return {std::move(*yaml), std::move(spec), std::move(entities)};
            } catch (const Error& e) {
                reason = e.what();
            }
        } else {
            reason = "reply has no ```yaml block";
        }
        result.validation_log.push_back({BootstrapPhase::Config, attempt, reason, reply});
        rejection = reason;
    }
    std::vector<DraftRejection> log;
    for (const auto& r : result.validation_log) {
        if (r.phase == BootstrapPhase::Config) log.push_back(r);
    }
    throw BootstrapExhausted(BootstrapPhase::Config, std::move(log));
}

std::optional<std::string> check_discovered_table(const std::string& text) {
    std::vector<csv::Row> rows;
    try {
        rows = parse_raw_table(text);
    } catch (const csv::ParseError& e) {
        return std::string("malformed CSV: ") + e.what();
    }
    if (rows.empty()) return "table has no header";
    const auto& header = rows.front();
    if (std::set<std::string>(header.begin(), header.end()).size() != header.size()) {
        return "header repeats a column name";
    }
    for (const auto& name : header) {
        if (name.empty()) return "header has an empty column name";
    }
    if (rows.size() < 2) return "table has no entity rows";
    std::set<std::string> keys;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size()) {
            return "row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) + " fields, expected " +
                   std::to_string(header.size());
        }
        if (rows[i].front().empty()) return "row " + std::to_string(i) + " has an empty " + header.front();
        if (!keys.insert(rows[i].front()).second) {
            return "duplicate " + header.front() + " '" + rows[i].front() + "'";
        }
    }
    return std::nullopt;
}

}  // namespace

Playbook Playbook::from_text(std::string text) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw BootstrapError(BootstrapErrorKind::InvalidPlaybook, "playbook", "playbook is empty");
    }
    if (text.find(kKeyReferenceHeading) == std::string::npos) {
        throw BootstrapError(BootstrapErrorKind::InvalidPlaybook, "playbook",
                             "playbook lacks the '" + std::string(kKeyReferenceHeading) + "' section");
    }
    return Playbook{std::move(text)};
}

Playbook Playbook::load(const std::filesystem::path& path) {
    try {
        return from_text(read_text_file(path));
    } catch (const IoError& e) {
        throw BootstrapError(BootstrapErrorKind::InvalidPlaybook, path.string(), e.what());
    }
}

std::string_view to_string(BootstrapPhase phase) {
    return phase == BootstrapPhase::Entities ? "entities" : "config";
}

BootstrapExhausted::BootstrapExhausted(BootstrapPhase phase, std::vector<DraftRejection> log)
    : BootstrapError(BootstrapErrorKind::Exhausted, std::string(to_string(phase)),
                     "no valid " + std::string(to_string(phase)) + " draft after " + std::to_string(log.size()) +
                         " attempts"),
      log_(std::move(log)) {}

std::optional<std::string> extract_fenced_block(std::string_view text, std::string_view tag) {
    std::size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string_view::npos) {
        const auto line_end = text.find('\n', pos);
        if (line_end == std::string_view::npos) return std::nullopt;
        auto info = text.substr(pos + 3, line_end - pos - 3);
        while (!info.empty() && (info.back() == ' ' || info.back() == '\r')) info.remove_suffix(1);
        const auto close = text.find("```", line_end + 1);
        if (info == tag) {
            if (close == std::string_view::npos) return std::nullopt;
            return std::string(text.substr(line_end + 1, close - line_end - 1));
        }
        if (close == std::string_view::npos) return std::nullopt;
        pos = close + 3;
    }
    return std::nullopt;
}

BootstrapResult bootstrap_with_entities(std::string_view request, const Playbook& playbook,
                                        std::string_view entity_csv, Provider& provider,
                                        const BootstrapOptions& options) {
    std::vector<csv::Row> rows;
    try {
        rows = parse_raw_table(entity_csv);
    } catch (const csv::ParseError& e) {
        throw BootstrapError(BootstrapErrorKind::InvalidEntities, "entities", std::string("entity CSV: ") + e.what());
    }
    if (rows.empty()) throw BootstrapError(BootstrapErrorKind::InvalidEntities, "entities", "entity CSV has no header");

    BootstrapResult result;
    auto draft = generate_config(request, playbook, entity_csv, rows, provider, options, result);
    result.task_yaml = std::move(draft.yaml);
    result.spec = std::move(draft.spec);
    result.entities = std::move(draft.entities);
    return result;
}

BootstrapResult bootstrap_discover_entities(std::string_view request, const Playbook& playbook, Provider& provider,
                                            const BootstrapOptions& options) {
    BootstrapResult result;
    std::optional<std::string> rejection;
    std::optional<std::string> table;
    bool all_empty = true;
    for (int attempt = 1; attempt <= options.max_attempts && !table; ++attempt) {
        ++result.entity_attempts;
        ++result.attempts_used;
        auto req = make_request(options, playbook, kEntityInstructions,
                                user_prompt(request, "", rejection ? &*rejection : nullptr, "csv"), true);
        const auto reply = provider.send(req).raw_text;
        std::string reason;
        if (auto csv_text = extract_fenced_block(reply, "csv")) {
            if (auto problem = check_discovered_table(*csv_text)) {
                reason = *problem;
                if (reason != "table has no entity rows") all_empty = false;
            } else {
                table = std::move(*csv_text);
                break;
            }
        } else {
            reason = "reply has no ```csv block";
            all_empty = false;
        }
        result.validation_log.push_back({BootstrapPhase::Entities, attempt, reason, reply});
        rejection = reason;
    }
    if (!table) {
        if (all_empty) {
            throw BootstrapError(BootstrapErrorKind::EmptyEntityDiscovery, "entities",
                                 "entity discovery returned no rows in " + std::to_string(result.entity_attempts) +
                                     " attempts");
        }
        throw BootstrapExhausted(BootstrapPhase::Entities, result.validation_log);
    }

    const auto rows = parse_raw_table(*table);
    auto draft = generate_config(request, playbook, *table, rows, provider, options, result);
    result.task_yaml = std::move(draft.yaml);
    result.spec = std::move(draft.spec);
    result.entities = std::move(draft.entities);
    result.entity_csv = std::move(table);
    return result;
}

TaskSpec set_baseline_mode(TaskSpec spec) {
    spec.search_enabled = false;
    if (!spec.system_prompt.starts_with(kBaselinePrefix)) {
        spec.system_prompt = std::string(kBaselinePrefix) + spec.system_prompt;
    }
    return spec;
}

nlohmann::json bootstrap_log_to_json(std::string_view request, const BootstrapResult& result) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& r : result.validation_log) {
        log.push_back({{"phase", to_string(r.phase)}, {"attempt", r.attempt}, {"reason", r.reason}, {"reply", r.reply}});
    }
    return {
        {"request", request},
        {"mode", result.entity_csv ? "discover_entities" : "with_entities"},
        {"task_name", result.spec.task_name},
        {"attempts_used", result.attempts_used},
        {"entity_attempts", result.entity_attempts},
        {"config_attempts", result.config_attempts},
        {"entity_count", result.entities.rows.size()},
        {"validation_log", std::move(log)},
    };
}

std::filesystem::path write_bootstrap_outputs(const std::filesystem::path& tasks_dir, std::string_view request,
                                              const BootstrapResult& result, std::string_view entity_csv) {
    const auto dir = tasks_dir / result.spec.task_name;
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "task.yaml", result.task_yaml);
    write_file_atomic(dir / "entities.csv", result.entity_csv ? *result.entity_csv : std::string(entity_csv));
    write_file_atomic(dir / "bootstrap_log.json", bootstrap_log_to_json(request, result).dump(2) + "\n");
    return dir;
}

}  // namespace curate
