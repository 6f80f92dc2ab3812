#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curate/provider.hpp"
#include "curate/task_config.hpp"

namespace curate::fixturegen {

/// Scripted answer for one cell; cells without a script answer the truth.
struct CellScript {
    enum class Outcome { Truth, Answer, NotFound };
    Outcome outcome = Outcome::Truth;
    std::string answer;  // text form, for Outcome::Answer
};

struct Scenario {
    Usage usage_per_call;
    std::set<std::string> malformed_first;  // entities whose first reply is not JSON
    std::map<std::pair<std::string, std::string>, CellScript> cells;
};

/// Scenario from scenario.json; `cells_key` selects "cells" or "baseline_cells".
Scenario load_scenario(const nlohmann::json& j, const std::string& cells_key);

/// Stands in for a model: identifies the entity from the user prompt and
/// replies with truth.csv values, bent by the scenario.
class SimulatedProvider final : public Provider {
public:
    SimulatedProvider(TaskSpec spec, const EntitySet& entities, std::string_view truth_csv, Scenario scenario);

    ProviderResponse send(const CurationRequest& request) override;
    std::string identity() const override { return "simulated"; }

private:
    TaskSpec spec_;
    Scenario scenario_;
    std::map<std::string, std::string, std::less<>> entity_by_prompt_;
    std::map<std::string, std::vector<std::string>, std::less<>> truth_;  // entity id -> text per attribute
};

/// Returns canned replies in order; throws once they run out.
class ScriptedProvider final : public Provider {
public:
    explicit ScriptedProvider(std::vector<std::string> replies, Usage usage_per_call = {3000, 1500, 4});

    ProviderResponse send(const CurationRequest& request) override;
    std::string identity() const override { return "scripted"; }
    std::size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> replies_;
    Usage usage_;
};

/// Reads a bootstrap script.json and renders its replies as fenced text.
std::vector<std::string> load_script_replies(const std::filesystem::path& script_path);

/// Regenerates every fixture directory under `out_dir` from `data_dir`.
/// Returns the names of the directories written.
std::vector<std::string> generate_all(const std::filesystem::path& data_dir, const std::filesystem::path& playbook,
                                      const std::filesystem::path& out_dir);

}  // namespace curate::fixturegen
