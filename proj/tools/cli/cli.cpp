#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "curate/bootstrap.hpp"
#include "curate/compiler.hpp"
#include "curate/csv.hpp"
#include "curate/engine.hpp"
#include "curate/evaluator.hpp"
#include "curate/fs_util.hpp"
#include "curate/ledger.hpp"
#include "curate/live_provider.hpp"
#include "curate/replay_provider.hpp"
#include "curate/run_dir.hpp"
#include "curate/task_config.hpp"

namespace curate::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

struct ProviderFlags {
    std::string kind = "replay";
    std::string fixtures;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& flags) {
    cmd->add_option("--provider", flags.kind, "Model provider: live, replay (recorded fixtures) or record (live, saving fixtures)")
        ->check(CLI::IsMember({"live", "replay", "record"}))
        ->capture_default_str();
    cmd->add_option("--fixtures", flags.fixtures, "Fixture directory read by replay and written by record");
}

// Owns the provider chosen by the flags; record wraps a live provider.
struct ProviderStack {
    std::unique_ptr<Provider> live;
    std::unique_ptr<RecordingProvider> recorder;
    std::unique_ptr<ReplayProvider> replay;

    Provider& get() {
        if (replay) return *replay;
        if (recorder) return *recorder;
        return *live;
    }
};

ProviderStack make_provider(const ProviderFlags& flags, const std::string& api, const Environment& env) {
    ProviderStack stack;
    if (flags.kind == "replay") {
        if (flags.fixtures.empty()) throw UsageError("--provider replay needs --fixtures DIR");
        if (!fs::is_directory(flags.fixtures)) throw UsageError("fixture directory not found: " + flags.fixtures);
        stack.replay = std::make_unique<ReplayProvider>(flags.fixtures);
        return stack;
    }
    LiveConfig config;
    config.api = api;
    config.api_key = env.getenv("DP_API_KEY");
    if (auto base = env.getenv("DP_API_BASE_URL"); !base.empty()) config.base_url = base;
    auto transport = env.transport_factory(config.base_url);
    stack.live = std::make_unique<LiveProvider>(config, std::move(transport));
    if (flags.kind == "record") {
        if (flags.fixtures.empty()) throw UsageError("--provider record needs --fixtures DIR");
        fs::create_directories(flags.fixtures);
        stack.recorder = std::make_unique<RecordingProvider>(*stack.live, flags.fixtures);
    }
    return stack;
}

std::string read_input(const std::string& path, std::string_view what) {
    try {
        return read_text_file(path);
    } catch (const IoError&) {
        throw UsageError("cannot read " + std::string(what) + ": " + path);
    }
}

CostReport run_costs(const RunDir& dir, const TaskSpec& spec) {
    const auto lines = read_telemetry(dir.telemetry_path());
    return aggregate(cost_records_from_telemetry(lines, spec.pricing));
}

std::string share_text(double share) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", share * 100.0);
    return buf;
}

int execute_run(const TaskSpec& spec, const EntitySet& entities, const fs::path& run_dir, const ProviderFlags& flags,
                bool retry_failed, std::ostream& out, const Environment& env) {
    auto stack = make_provider(flags, spec.api, env);
    RunOptions options;
    options.retry_failed = retry_failed;
    const auto summary = run_task(spec, entities, stack.get(), run_dir, options);
    const auto compiled = compile_and_write(run_dir);
    const RunDir dir(run_dir);
    const auto costs = run_costs(dir, spec);

    out << "task " << spec.task_name << ": " << summary.total << " entities" << (spec.search_enabled ? "" : " (baseline, web search off)") << "\n";
    out << "done " << summary.done << ", failed " << summary.failed << "\n";
    out << "this invocation: " << summary.processed << " entities, " << summary.provider_calls << " provider calls\n";
    out << "total cost " << costs.total.to_cents() << ", mean per entity " << costs.mean.to_cents() << ", search share "
        << share_text(costs.search_share) << "\n";
    if (stack.recorder) out << "recorded " << stack.recorder->recorded() << " fixtures in " << flags.fixtures << "\n";
    out << "wrote " << dir.curated_csv_path().string() << " (" << compiled.table.rows.size() << " rows)\n";
    if (summary.failed > 0) {
        out << summary.failed << " entities failed; inspect results/*.failed.json, then resume\n";
        return kFailedEntities;
    }
    return kOk;
}

// Cells a human should look at: unresolved by the model and not yet reviewed.
bool needs_review(const CuratedCell& cell) {
    if (cell.provenance == CellProvenance::Human) return false;
    return cell.status == CellStatus::NotFound || cell.provenance == CellProvenance::Failed;
}

struct ReviewTally {
    OverrideSet accepted;
    std::size_t skipped = 0;
};

std::optional<Override> interpret_answer(const std::string& raw, const CuratedRow& row, const AttributeSpec& attr,
                                         std::string& problem) {
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::nullopt;
    const auto text = raw.substr(first, raw.find_last_not_of(" \t\r") - first + 1);
    if (text == "skip") return std::nullopt;
    Override o{row.entity_id, attr.name, AttributeStatus::Found, std::nullopt};
    if (text == "confirm-not-found") {
        o.status = AttributeStatus::NotFound;
        return o;
    }
    Value v;
    if (auto err = value_from_text(attr.value_kind, attr.enum_choices, text, v)) {
        problem = *err;
        return std::nullopt;
    }
    o.value = std::move(v);
    return o;
}

}  // namespace

Environment system_environment() {
    Environment env;
    env.transport_factory = [](const std::string& base_url) { return make_http_transport(base_url); };
    env.getenv = [](const std::string& name) {
        const char* v = std::getenv(name.c_str());
        return v ? std::string(v) : std::string();
    };
    return env;
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, const Environment& env) {
    CLI::App app{"Schema-driven, entity-parallel data curation with LLM web search", "curate"};
    app.set_help_all_flag("--help-all", "Print help for every subcommand and exit");
    app.set_version_flag("--version", "curate 0.1.0");
    app.require_subcommand(1);

    ProviderFlags provider_flags;
    std::string task_path, entities_path, run_dir, curated_path, truth_path, aliases_path, out_path;
    std::string playbook_path = "CONSTITUTION.md", tasks_dir = "tasks", model_id{kDefaultBootstrapModel};
    std::string request_text, request_file, from_file, wage = "20";
    std::int64_t records_per_hour = 30;
    double alpha = 0.05;
    bool baseline = false;

    auto* run = app.add_subcommand("run", "Curate every entity of a task, then compile the table");
    run->add_option("--task", task_path, "Task descriptor (task.yaml)")->required();
    run->add_option("--entities", entities_path, "Entity table (CSV with a header row)")->required();
    run->add_option("--run-dir", run_dir, "Run directory; created when absent, resumed when present")->required();
    run->add_flag("--baseline", baseline, "Answer from model knowledge only, with web search disabled");
    add_provider_flags(run, provider_flags);

    auto* base = app.add_subcommand("baseline", "Same as run --baseline");
    base->add_option("--task", task_path, "Task descriptor (task.yaml)")->required();
    base->add_option("--entities", entities_path, "Entity table (CSV with a header row)")->required();
    base->add_option("--run-dir", run_dir, "Run directory; created when absent, resumed when present")->required();
    add_provider_flags(base, provider_flags);

    auto* resume = app.add_subcommand("resume", "Continue a run directory, retrying failed entities, then compile");
    resume->add_option("--run-dir", run_dir, "Existing run directory")->required();
    add_provider_flags(resume, provider_flags);

    auto* compile = app.add_subcommand("compile", "Build curated.csv and curated.jsonl from a settled run");
    compile->add_option("--run-dir", run_dir, "Run directory")->required();

    auto* eval = app.add_subcommand("eval", "Score a curated table against ground truth in both accuracy regimes");
    eval->add_option("--run-dir", run_dir, "Run directory holding curated.csv and its manifest");
    eval->add_option("--curated", curated_path, "Curated CSV (default: <run-dir>/curated.csv)");
    eval->add_option("--truth", truth_path, "Ground-truth CSV: key columns plus one column per attribute")->required();
    eval->add_option("--aliases", aliases_path, "Alias table (variant,canonical) for string matching");
    eval->add_option("--alpha", alpha, "Confidence intervals cover 1 - alpha")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    eval->add_option("--task", task_path, "Task descriptor (default: the run manifest next to the curated table)");
    eval->add_option("--out", out_path, "Report path (default: eval_report.json beside the curated table)");

    auto* report = app.add_subcommand("report", "Summarize run cost from telemetry");
    report->add_option("--run-dir", run_dir, "Run directory")->required();
    report->add_option("--wage", wage, "Hourly wage of a human curator in dollars")->capture_default_str();
    report->add_option("--records-per-hour", records_per_hour, "Records a human curator completes per hour")->capture_default_str();

    auto* boot = app.add_subcommand("bootstrap", "Draft task.yaml (and entities.csv when --entities is absent) from a request");
    boot->add_option("request", request_text, "Natural-language request");
    boot->add_option("--request-file", request_file, "Read the request from a file");
    boot->add_option("--playbook", playbook_path, "Conventions document sent with every prompt")->capture_default_str();
    boot->add_option("--entities", entities_path, "Existing entity table; without it the entities are discovered online");
    boot->add_option("--tasks-dir", tasks_dir, "Output root; files go to <tasks-dir>/<task_name>/")->capture_default_str();
    boot->add_option("--model", model_id, "Model that drafts the files")->capture_default_str();
    add_provider_flags(boot, provider_flags);

    auto* review = app.add_subcommand("review", "Resolve not_found and failed cells by hand, then recompile");
    review->add_option("--run-dir", run_dir, "Compiled run directory")->required();
    review->add_option("--from-file", from_file, "Answers CSV (entity_id,attribute,answer) instead of the terminal");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, out);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (run->parsed() || base->parsed()) {
            auto spec = parse_task_spec(read_input(task_path, "task descriptor"));
            if (baseline || base->parsed()) spec = set_baseline_mode(std::move(spec));
            const auto entities = parse_entity_set(read_input(entities_path, "entity table"), spec);
            return execute_run(spec, entities, run_dir, provider_flags, false, out, env);
        }

        if (resume->parsed()) {
            const RunDir dir(run_dir);
            if (!dir.has_manifest()) throw UsageError("not a run directory: " + run_dir);
            auto [spec, entities] = dir.load_config();
            return execute_run(spec, entities, run_dir, provider_flags, true, out, env);
        }

        if (compile->parsed()) {
            const auto compiled = compile_and_write(run_dir);
            const RunDir dir(run_dir);
            out << "compiled " << compiled.table.rows.size() << " rows (done " << compiled.done << ", failed "
                << compiled.failed << ", overrides " << compiled.overrides_applied << ")\n";
            out << "wrote " << dir.curated_csv_path().string() << " and " << dir.curated_jsonl_path().string() << "\n";
            return kOk;
        }

        if (eval->parsed()) {
            if (curated_path.empty()) {
                if (run_dir.empty()) throw UsageError("eval needs --curated FILE or --run-dir DIR");
                curated_path = RunDir(run_dir).curated_csv_path().string();
            }
            const fs::path curated_file(curated_path);
            const auto home = curated_file.has_parent_path() ? curated_file.parent_path() : fs::path(".");
            TaskSpec spec;
            if (!task_path.empty()) {
                spec = parse_task_spec(read_input(task_path, "task descriptor"));
            } else {
                const RunDir dir(run_dir.empty() ? home : fs::path(run_dir));
                if (!dir.has_manifest()) throw UsageError("no manifest beside " + curated_path + "; pass --task FILE");
                spec = dir.load_config().first;
            }
            const auto table = curated_from_csv(read_input(curated_path, "curated table"), spec);
            const auto truth = parse_ground_truth(read_input(truth_path, "ground truth"), spec);
            const auto rule = aliases_path.empty() ? MatchRule{} : load_alias_table(read_input(aliases_path, "alias table"));
            auto result = evaluate(table, truth, rule, alpha);
            if (!spec.search_enabled) result.annotations.insert(result.annotations.begin(), "baseline run: web search disabled");
            const fs::path report_path = out_path.empty() ? home / "eval_report.json" : fs::path(out_path);
            write_file_atomic(report_path, eval_report_to_json(result).dump(2) + "\n");
            out << render_eval_report(result);
            out << "wrote " << report_path.string() << "\n";
            return kOk;
        }

        if (report->parsed()) {
            const RunDir dir(run_dir);
            if (!dir.has_manifest()) throw UsageError("not a run directory: " + run_dir);
            const auto spec = dir.load_config().first;
            const auto hourly = Money::parse(wage);
            auto costs = run_costs(dir, spec);
            costs.human_baseline_per_record = human_baseline(hourly, records_per_hour);
            const auto report_path = fs::path(run_dir) / "cost_report.json";
            write_file_atomic(report_path, cost_report_to_json(costs, hourly, records_per_hour).dump(2) + "\n");
            out << render_cost_report(costs, hourly, records_per_hour);
            out << "wrote " << report_path.string() << "\n";
            return kOk;
        }

        if (boot->parsed()) {
            if (!request_file.empty()) request_text = read_input(request_file, "request file");
            if (request_text.empty()) throw UsageError("bootstrap needs a request (argument or --request-file)");
            const auto playbook = Playbook::load(fs::path(playbook_path).is_absolute() ? fs::path(playbook_path)
                                                                                      : fs::path(env.cwd) / playbook_path);
            auto stack = make_provider(provider_flags, "responses", env);
            BootstrapOptions options;
            options.model_id = model_id;
            BootstrapResult result;
            std::string entity_csv;
            if (!entities_path.empty()) {
                entity_csv = read_input(entities_path, "entity table");
                result = bootstrap_with_entities(request_text, playbook, entity_csv, stack.get(), options);
            } else {
                result = bootstrap_discover_entities(request_text, playbook, stack.get(), options);
            }
            const auto dir = write_bootstrap_outputs(tasks_dir, request_text, result, entity_csv);
            out << "task " << result.spec.task_name << ": " << result.spec.attributes.size() << " attributes, "
                << result.entities.rows.size() << " entities"
                << (result.entity_csv ? " (discovered)" : "") << "\n";
            out << "accepted after " << result.attempts_used << " drafts";
            if (result.entity_csv) {
                out << " (" << result.entity_attempts << " entity, " << result.config_attempts << " config)";
            }
            out << "\nwrote " << (dir / "task.yaml").string() << ", " << (dir / "entities.csv").string() << ", "
                << (dir / "bootstrap_log.json").string() << "\n";
            return kOk;
        }

        if (review->parsed()) {
            const RunDir dir(run_dir);
            if (!dir.has_manifest() || !fs::exists(dir.curated_csv_path())) {
                throw UsageError("no compiled table in " + run_dir + "; run compile first");
            }
            const auto spec = dir.load_config().first;
            const auto table = curated_from_csv(read_text_file(dir.curated_csv_path()), spec);

            std::map<std::pair<std::string, std::string>, std::string> scripted;
            const bool from_terminal = from_file.empty();
            if (!from_terminal) {
                const auto rows = csv::parse(read_input(from_file, "answers file"));
                if (rows.empty() || rows.front() != csv::Row{"entity_id", "attribute", "answer"}) {
                    throw UsageError("answers file header must be entity_id,attribute,answer");
                }
                for (std::size_t i = 1; i < rows.size(); ++i) {
                    if (rows[i].size() == 1 && rows[i].front().empty()) continue;
                    if (rows[i].size() != 3) throw UsageError("answers record " + std::to_string(i) + " needs 3 fields");
                    scripted[{rows[i][0], rows[i][1]}] = rows[i][2];
                }
            }

            ReviewTally tally;
            std::size_t pending = 0;
            for (const auto& row : table.rows) {
                for (std::size_t a = 0; a < table.attributes.size(); ++a) pending += needs_review(row.cells[a]);
            }
            if (pending == 0) {
                out << "nothing to review\n";
                return kOk;
            }

            bool input_closed = false;
            std::size_t index = 0;
            for (const auto& row : table.rows) {
                for (std::size_t a = 0; a < table.attributes.size(); ++a) {
                    if (!needs_review(row.cells[a])) continue;
                    const auto& attr = table.attributes[a];
                    ++index;
                    out << "[" << index << "/" << pending << "] " << row.entity_id << "\n";
                    for (std::size_t k = 0; k < table.key_columns.size(); ++k) {
                        out << "  " << table.key_columns[k] << ": " << row.key_values[k] << "\n";
                    }
                    out << "  " << attr.name << " (" << to_string(attr.value_kind) << ") is "
                        << to_string(row.cells[a].status) << "\n";
                    std::optional<Override> accepted;
                    if (from_terminal) {
                        while (!input_closed) {
                            out << "  answer (value, skip, confirm-not-found): " << std::flush;
                            std::string line;
                            if (!std::getline(in, line)) {
                                input_closed = true;
                                out << "\n";
                                break;
                            }
                            std::string problem;
                            accepted = interpret_answer(line, row, attr, problem);
                            if (problem.empty()) break;
                            out << "  invalid: " << problem << "\n";
                        }
                    } else if (auto it = scripted.find({row.entity_id, attr.name}); it != scripted.end()) {
                        std::string problem;
                        accepted = interpret_answer(it->second, row, attr, problem);
                        if (!problem.empty()) {
                            throw UsageError("answer for " + row.entity_id + "/" + attr.name + ": " + problem);
                        }
                    }
                    if (accepted) {
                        out << "  recorded\n";
                        tally.accepted.push_back(std::move(*accepted));
                    } else {
                        out << "  skipped\n";
                        ++tally.skipped;
                    }
                }
            }

            if (!tally.accepted.empty()) {
                const auto model_table = compile_run(run_dir);
                OverrideSet all;
                if (fs::exists(dir.overrides_path())) {
                    all = parse_overrides_csv(read_text_file(dir.overrides_path()), model_table);
                }
                all.insert(all.end(), tally.accepted.begin(), tally.accepted.end());
                validate_overrides(all, model_table);
                write_file_atomic(dir.overrides_path(), serialize_overrides(all));
            }
            const auto compiled = compile_and_write(run_dir);
            out << "accepted " << tally.accepted.size() << ", skipped " << tally.skipped << "; "
                << compiled.overrides_applied << " overrides applied to " << dir.curated_csv_path().string() << "\n";
            return kOk;
        }
    } catch (const BootstrapExhausted& e) {
        out << "error: " << e.what() << "\n";
        for (const auto& r : e.validation_log()) {
            out << "  " << to_string(r.phase) << " draft " << r.attempt << ": " << r.reason << "\n";
        }
        return kBootstrapExhausted;
    } catch (const BootstrapError& e) {
        out << "error: " << e.what() << "\n";
        return e.kind() == BootstrapErrorKind::EmptyEntityDiscovery ? kBootstrapExhausted : kUsage;
    } catch (const ProviderError& e) {
        out << "error: provider " << to_string(e.kind()) << ": " << e.what() << "\n";
        return kProviderError;
    } catch (const IncompleteRun& e) {
        out << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace curate::cli
