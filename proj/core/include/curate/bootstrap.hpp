#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "curate/error.hpp"
#include "curate/provider.hpp"
#include "curate/task_config.hpp"

namespace curate {

enum class BootstrapErrorKind { InvalidPlaybook, InvalidEntities, Exhausted, EmptyEntityDiscovery };

using BootstrapError = KindedError<BootstrapErrorKind>;

/// The conventions document sent ahead of every bootstrap prompt.
struct Playbook {
    std::string text;

    /// Rejects empty text and text without a "YAML key reference" heading.
    static Playbook from_text(std::string text);
    static Playbook load(const std::filesystem::path& path);
};

enum class BootstrapPhase { Entities, Config };

std::string_view to_string(BootstrapPhase phase);

struct DraftRejection {
    BootstrapPhase phase = BootstrapPhase::Config;
    int attempt = 0;  // 1-based within the phase
    std::string reason;
    std::string reply;
};

struct BootstrapResult {
    std::string task_yaml;
    std::optional<std::string> entity_csv;  // set by discovery
    int attempts_used = 0;                  // all phases
    int entity_attempts = 0;
    int config_attempts = 0;
    std::vector<DraftRejection> validation_log;
    TaskSpec spec;
    EntitySet entities;
};

class BootstrapExhausted : public BootstrapError {
public:
    BootstrapExhausted(BootstrapPhase phase, std::vector<DraftRejection> log);
    const std::vector<DraftRejection>& validation_log() const noexcept { return log_; }

private:
    std::vector<DraftRejection> log_;
};

inline constexpr std::string_view kDefaultBootstrapModel = "gpt-5-mini";

struct BootstrapOptions {
    std::string model_id{kDefaultBootstrapModel};
    int max_attempts = 3;  // per phase
    int max_output_tokens = 16000;
};

/// Body of the first fence opened with ``` followed by `tag`.
std::optional<std::string> extract_fenced_block(std::string_view text, std::string_view tag);

/// Asks for a task descriptor that fits the given entity table, feeding
/// every validation failure back into the next attempt.
BootstrapResult bootstrap_with_entities(std::string_view request, const Playbook& playbook,
                                        std::string_view entity_csv, Provider& provider,
                                        const BootstrapOptions& options);

/// First asks (with web search) for the entity table, then for the task
/// descriptor. Each phase has its own attempt cap. The first column of the
/// discovered table must be unique per row.
BootstrapResult bootstrap_discover_entities(std::string_view request, const Playbook& playbook,
                                            Provider& provider, const BootstrapOptions& options);

inline constexpr std::string_view kBaselinePrefix =
    "Answer from your own knowledge only; web search is not available. "
    "If you are not confident in a value, report the attribute as not_found.\n\n";

/// Disables web search and prefixes the system prompt with kBaselinePrefix
/// (once; applying it again changes nothing).
TaskSpec set_baseline_mode(TaskSpec spec);

nlohmann::json bootstrap_log_to_json(std::string_view request, const BootstrapResult& result);

/// Writes task.yaml, entities.csv and bootstrap_log.json under
/// `<tasks_dir>/<task_name>/` and returns that directory.
std::filesystem::path write_bootstrap_outputs(const std::filesystem::path& tasks_dir, std::string_view request,
                                              const BootstrapResult& result, std::string_view entity_csv);

}  // namespace curate
