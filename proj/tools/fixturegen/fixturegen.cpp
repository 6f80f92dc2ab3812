#include "fixturegen.hpp"

#include <stdexcept>

#include "curate/bootstrap.hpp"
#include "curate/csv.hpp"
#include "curate/engine.hpp"
#include "curate/evaluator.hpp"
#include "curate/fs_util.hpp"
#include "curate/replay_provider.hpp"

namespace curate::fixturegen {

namespace fs = std::filesystem;

Scenario load_scenario(const nlohmann::json& j, const std::string& cells_key) {
    Scenario s;
    s.usage_per_call = usage_from_json(j.at("usage"));
    for (const auto& id : j.value("malformed_first", nlohmann::json::array())) s.malformed_first.insert(id.get<std::string>());
    for (const auto& c : j.value(cells_key, nlohmann::json::array())) {
        CellScript script;
        const auto outcome = c.at("outcome").get<std::string>();
        if (outcome == "not_found") {
            script.outcome = CellScript::Outcome::NotFound;
        } else if (outcome == "answer") {
            script.outcome = CellScript::Outcome::Answer;
            const auto& a = c.at("answer");
            script.answer = a.is_string() ? a.get<std::string>() : a.dump();
        } else {
            throw std::invalid_argument("unknown scenario outcome '" + outcome + "'");
        }
        s.cells[{c.at("entity_id").get<std::string>(), c.at("attribute").get<std::string>()}] = script;
    }
    return s;
}

SimulatedProvider::SimulatedProvider(TaskSpec spec, const EntitySet& entities, std::string_view truth_csv,
                                     Scenario scenario)
    : spec_(std::move(spec)), scenario_(std::move(scenario)) {
    for (const auto& record : entities.rows) {
        entity_by_prompt_[render_prompt(spec_, record).user] = record.entity_id;
    }
    const auto rows = csv::parse(truth_csv);
    const auto& header = rows.at(0);
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::invalid_argument("truth lacks column " + name);
        return static_cast<std::size_t>(it - header.begin());
    };
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) continue;
        std::vector<std::string> key;
        for (const auto& k : spec_.entity_key_columns) key.push_back(rows[r][column(k)]);
        std::vector<std::string> values;
        for (const auto& a : spec_.attributes) values.push_back(rows[r][column(a.name)]);
        truth_[make_entity_id(key)] = std::move(values);
    }
}

ProviderResponse SimulatedProvider::send(const CurationRequest& request) {
    auto it = entity_by_prompt_.upper_bound(request.user);
    std::string entity_id;
    bool first_attempt = false;
    while (it != entity_by_prompt_.begin()) {
        --it;
        if (request.user.starts_with(it->first)) {
            entity_id = it->second;
            first_attempt = request.user.size() == it->first.size();
            break;
        }
    }
    if (entity_id.empty()) throw ProviderError(ProviderErrorKind::Rejected, "", "prompt matches no entity");

    ProviderResponse response;
    response.model_id = request.model_id;
    response.usage = scenario_.usage_per_call;
    if (!request.search_enabled) response.usage.search_calls = 0;
    if (first_attempt && scenario_.malformed_first.contains(entity_id)) {
        response.raw_text = "I found the requested details, summarized below in prose rather than JSON.";
        return response;
    }

    const auto& truth = truth_.at(entity_id);
    nlohmann::ordered_json reply = nlohmann::ordered_json::object();
    for (std::size_t a = 0; a < spec_.attributes.size(); ++a) {
        const auto& attr = spec_.attributes[a];
        CellScript script;
        if (auto s = scenario_.cells.find({entity_id, attr.name}); s != scenario_.cells.end()) script = s->second;
        std::string text = script.outcome == CellScript::Outcome::Answer ? script.answer : truth[a];
        if (script.outcome == CellScript::Outcome::NotFound || text == kNotApplicable) {
            reply[attr.name] = {{"status", "not_found"}};
            continue;
        }
        Value v;
        if (auto err = value_from_text(attr.value_kind, attr.enum_choices, text, v)) {
            throw std::invalid_argument(entity_id + "/" + attr.name + ": " + *err);
        }
        reply[attr.name] = {{"status", "found"}, {"value", nlohmann::ordered_json::parse(value_to_json(v).dump())}};
    }
    response.raw_text = reply.dump();
    return response;
}

ScriptedProvider::ScriptedProvider(std::vector<std::string> replies, Usage usage_per_call)
    : replies_(replies.begin(), replies.end()), usage_(usage_per_call) {}

ProviderResponse ScriptedProvider::send(const CurationRequest& request) {
    std::lock_guard lock(mutex_);
    if (replies_.empty()) throw ProviderError(ProviderErrorKind::Rejected, "", "script has no replies left");
    ProviderResponse response;
    response.raw_text = std::move(replies_.front());
    replies_.pop_front();
    response.model_id = request.model_id;
    response.usage = usage_;
    if (!request.search_enabled) response.usage.search_calls = 0;
    return response;
}

std::size_t ScriptedProvider::remaining() const {
    std::lock_guard lock(mutex_);
    return replies_.size();
}

std::vector<std::string> load_script_replies(const fs::path& script_path) {
    const auto script = nlohmann::json::parse(read_text_file(script_path));
    const auto base = script_path.parent_path();
    std::vector<std::string> replies;
    for (const auto& r : script.at("replies")) {
        auto body = read_text_file(base / r.at("file").get<std::string>());
        if (!body.empty() && body.back() != '\n') body.push_back('\n');
        replies.push_back(r.value("preamble", std::string()) + "\n\n```" + r.at("fence").get<std::string>() + "\n" +
                          body + "```\n");
    }
    return replies;
}

namespace {

fs::path fresh_dir(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void generate_runs(const fs::path& task_dir, const fs::path& out_dir, std::vector<std::string>& written) {
    const auto scenario_json = nlohmann::json::parse(read_text_file(task_dir / "scenario.json"));
    const auto base_spec = parse_task_spec(read_text_file(task_dir / "task.yaml"));
    const auto entities_text = read_text_file(task_dir / "entities.csv");
    const auto truth_text = read_text_file(task_dir / "truth.csv");
    for (const auto& run : scenario_json.at("runs")) {
        const auto name = run.at("name").get<std::string>();
        const bool baseline = run.value("baseline", false);
        const auto spec = baseline ? set_baseline_mode(base_spec) : base_spec;
        const auto entities = parse_entity_set(entities_text, spec);
        SimulatedProvider model(spec, entities, truth_text,
                                load_scenario(scenario_json, baseline ? "baseline_cells" : "cells"));
        const auto target = fresh_dir(out_dir / name);
        RecordingProvider recorder(model, target);
        const auto scratch = fs::temp_directory_path() / ("curate-fixturegen-" + name);
        fs::remove_all(scratch);
        const auto summary = run_task(spec, entities, recorder, scratch);
        fs::remove_all(scratch);
        if (summary.failed != 0) throw std::runtime_error(name + ": simulated run left failed entities");
        written.push_back(name);
    }
}

void generate_bootstrap(const fs::path& script_dir, const Playbook& playbook, const fs::path& out_dir,
                        std::vector<std::string>& written) {
    const auto script_path = script_dir / "script.json";
    const auto script = nlohmann::json::parse(read_text_file(script_path));
    const auto request = read_text_file(script_dir / "request.txt");
    ScriptedProvider scripted(load_script_replies(script_path));
    const auto name = "bootstrap_" + script_dir.filename().string();
    RecordingProvider recorder(scripted, fresh_dir(out_dir / name));
    try {
        if (script.at("mode").get<std::string>() == "discover") {
            bootstrap_discover_entities(request, playbook, recorder, {});
        } else {
            const auto entities = read_text_file(script_dir / script.at("entities").get<std::string>());
            bootstrap_with_entities(request, playbook, entities, recorder, {});
        }
    } catch (const BootstrapExhausted&) {
    }
    if (scripted.remaining() != 0) throw std::runtime_error(name + ": script has unused replies");
    written.push_back(name);
}

}  // namespace

std::vector<std::string> generate_all(const fs::path& data_dir, const fs::path& playbook_path, const fs::path& out_dir) {
    std::vector<std::string> written;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(data_dir)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        if (fs::exists(dir / "scenario.json")) generate_runs(dir, out_dir, written);
    }
    const auto playbook = Playbook::load(playbook_path);
    if (fs::is_directory(data_dir / "bootstrap")) {
        std::vector<fs::path> scripts;
        for (const auto& entry : fs::directory_iterator(data_dir / "bootstrap")) {
            if (entry.is_directory()) scripts.push_back(entry.path());
        }
        std::sort(scripts.begin(), scripts.end());
        for (const auto& dir : scripts) generate_bootstrap(dir, playbook, out_dir, written);
    }
    return written;
}

}  // namespace curate::fixturegen
