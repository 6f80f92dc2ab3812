#include "curate/engine.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "curate/retry.hpp"
#include "curate/structured_output.hpp"

namespace curate {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string_view outcome_name(OutputErrorKind kind) {
    switch (kind) {
        case OutputErrorKind::InvalidJson: return "invalid_json";
        case OutputErrorKind::SchemaViolation: return "schema_violation";
        case OutputErrorKind::InconsistentStatus: return "inconsistent_status";
    }
    return "invalid_output";
}

Failure classify(const ProviderError& e) {
    switch (e.kind()) {
        case ProviderErrorKind::RateLimited: return {FailureClass::RateLimited, e.retry_after()};
        case ProviderErrorKind::TransientServer: return {FailureClass::TransientServer, e.retry_after()};
        case ProviderErrorKind::NetworkTimeout: return {FailureClass::NetworkTimeout, e.retry_after()};
        case ProviderErrorKind::MalformedProviderReply: return {FailureClass::MalformedOutput, std::nullopt};
        case ProviderErrorKind::AuthFailure: return {FailureClass::AuthFailure, std::nullopt};
        case ProviderErrorKind::Rejected:
        case ProviderErrorKind::FixtureMiss: return {FailureClass::NonRetryable, std::nullopt};
    }
    return {};
}

SteadyClock& default_clock() {
    static SteadyClock clock;
    return clock;
}

}  // namespace

CurationFailed::CurationFailed(Reason reason, std::string entity_id, std::string last_error, int attempts, Usage usage)
    : Error((reason == Reason::ExhaustedAttempts ? "exhausted attempts for '" : "non-retryable failure for '") +
            entity_id + "': " + last_error),
      reason_(reason),
      entity_id_(std::move(entity_id)),
      last_error_(std::move(last_error)),
      attempts_(attempts),
      usage_(usage) {}

std::string corrective_prompt(std::string_view user, std::string_view violation) {
    std::string out(user);
    out += "\nYour previous reply was rejected: ";
    out += violation;
    out += "\nReply again with only a JSON object that follows the required schema exactly.\n";
    return out;
}

EntityResult curate_entity(const TaskSpec& spec, const EntityRecord& record, Provider& provider,
                           const CurateContext& ctx) {
    Clock& clock = ctx.clock ? *ctx.clock : default_clock();
    std::mt19937_64 rng(ctx.seed ^ fnv1a(record.entity_id));

    const PromptBundle prompt = render_prompt(spec, record);
    CurationRequest request = make_curation_request(spec, prompt);

    Usage total;
    std::string last_error;
    int attempts = 0;
    while (attempts < spec.max_attempts) {
        const auto issued = ctx.limiter ? ctx.limiter->acquire() : clock.now();
        if (ctx.on_issue) ctx.on_issue(record.entity_id, issued);
        ++attempts;

        TelemetryLine line;
        line.entity_id = record.entity_id;
        line.attempt = attempts;
        line.model_id = request.model_id;
        line.search_tool_declared = request.search_enabled;

        ProviderResponse response;
        try {
            response = provider.send(request);
        } catch (const ProviderError& e) {
            line.outcome = std::string(to_string(e.kind()));
            if (ctx.on_call) ctx.on_call(line);
            if (e.kind() == ProviderErrorKind::AuthFailure) throw;
            last_error = e.what();
            const auto action = retry_policy(classify(e), attempts, rng);
            if (!action.retry()) {
                throw CurationFailed(CurationFailed::Reason::NonRetryable, record.entity_id, last_error, attempts, total);
            }
            if (attempts >= spec.max_attempts) break;
            if (action.corrective) request.user = corrective_prompt(prompt.user, last_error);
            if (action.delay.count() > 0) clock.sleep_for(action.delay);
            continue;
        }

        total += response.usage;
        line.usage = response.usage;
        try {
            auto results = parse_structured_output(response.raw_text, spec);
            line.outcome = "ok";
            if (ctx.on_call) ctx.on_call(line);
            return EntityResult{
                .entity_id = record.entity_id,
                .attribute_results = std::move(results),
                .usage = total,
                .attempts = attempts,
                .finished_at = utc_timestamp(),
                .provenance = Provenance::Model,
            };
        } catch (const OutputError& e) {
            line.outcome = std::string(outcome_name(e.kind()));
            if (ctx.on_call) ctx.on_call(line);
            last_error = e.what();
            request.user = corrective_prompt(prompt.user, last_error);
        }
    }
    throw CurationFailed(CurationFailed::Reason::ExhaustedAttempts, record.entity_id, last_error, attempts, total);
}

RunSummary run_task(const TaskSpec& spec, const EntitySet& entities, Provider& provider, const fs::path& run_dir,
                    const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    Clock& clock = options.clock ? *options.clock : default_clock();

    const RunDir dir(run_dir);
    dir.initialize(spec, entities, provider.identity());
    const RunState state = dir.scan(entities);

    std::unordered_map<std::string_view, const EntityRecord*> by_id;
    for (const auto& rec : entities.rows) by_id.emplace(rec.entity_id, &rec);

    std::vector<const EntityRecord*> todo;
    for (const auto& rec : entities.rows) {
        const bool pending = !state.completed.contains(rec.entity_id) && !state.failed.contains(rec.entity_id);
        const bool retry = options.retry_failed && state.failed.contains(rec.entity_id);
        if (pending || retry) todo.push_back(&rec);
    }

    RateLimiter limiter(spec.requests_per_minute, clock);
    TelemetryWriter telemetry(dir.telemetry_path());

    RunSummary summary;
    summary.total = entities.rows.size();
    summary.config_hash = config_hash(spec, entities);

    std::mutex summary_mutex;
    std::exception_ptr fatal;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> settled{0};
    std::atomic<bool> stop{false};

    CurateContext ctx;
    ctx.limiter = &limiter;
    ctx.clock = &clock;
    ctx.seed = options.seed;
    ctx.on_issue = options.on_issue;
    ctx.on_call = [&](const TelemetryLine& line) {
        telemetry.append(line);
        std::lock_guard lock(summary_mutex);
        summary.usage += line.usage;
        ++summary.provider_calls;
    };

    // Returns false when the outcome must be dropped (simulated interruption).
    auto claim_settlement = [&] {
        const auto index = settled.fetch_add(1);
        if (options.stop_after && index >= *options.stop_after) {
            stop = true;
            return false;
        }
        return true;
    };

    auto worker = [&] {
        while (!stop) {
            const auto i = next.fetch_add(1);
            if (i >= todo.size()) break;
            const EntityRecord& rec = *todo[i];
            try {
                EntityResult result = curate_entity(spec, rec, provider, ctx);
                if (!claim_settlement()) continue;
                dir.write_result(result);
            } catch (const CurationFailed& f) {
                if (!claim_settlement()) continue;
                dir.write_failed(FailedEntity{
                    .entity_id = f.entity_id(),
                    .reason = f.reason() == CurationFailed::Reason::ExhaustedAttempts ? "exhausted_attempts" : "non_retryable",
                    .last_error = f.last_error(),
                    .attempts = f.attempts(),
                    .usage = f.usage(),
                    .finished_at = utc_timestamp(),
                });
            } catch (...) {
                std::lock_guard lock(summary_mutex);
                if (!fatal) fatal = std::current_exception();
                stop = true;
            }
        }
    };

    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(spec.max_parallel), todo.size());
    {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);

    summary.processed = options.stop_after ? std::min(settled.load(), *options.stop_after) : settled.load();
    summary.interrupted = stop.load();
    const RunState after = dir.scan(entities);
    summary.done = after.completed.size();
    summary.failed = after.failed.size();
    summary.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    auto manifest = dir.read_manifest();
    manifest["updated_at"] = utc_timestamp();
    manifest["last_run"] = {
        {"done", summary.done},
        {"failed", summary.failed},
        {"pending", after.pending.size()},
        {"provider_calls", summary.provider_calls},
        {"usage", usage_to_json(summary.usage)},
        {"interrupted", summary.interrupted},
    };
    dir.write_manifest(manifest);
    return summary;
}

}  // namespace curate
