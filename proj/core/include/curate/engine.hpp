#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "curate/clock.hpp"
#include "curate/error.hpp"
#include "curate/provider.hpp"
#include "curate/rate_limiter.hpp"
#include "curate/run_dir.hpp"
#include "curate/task_config.hpp"

namespace curate {

/// Raised by curate_entity when an entity cannot be completed. Auth failures
/// are not wrapped; they propagate as ProviderError and abort the run.
class CurationFailed : public Error {
public:
    enum class Reason { ExhaustedAttempts, NonRetryable };

    CurationFailed(Reason reason, std::string entity_id, std::string last_error, int attempts, Usage usage);

    Reason reason() const noexcept { return reason_; }
    const std::string& entity_id() const noexcept { return entity_id_; }
    const std::string& last_error() const noexcept { return last_error_; }
    int attempts() const noexcept { return attempts_; }
    const Usage& usage() const noexcept { return usage_; }

private:
    Reason reason_;
    std::string entity_id_;
    std::string last_error_;
    int attempts_;
    Usage usage_;
};

/// Appended to the user prompt after a reply fails validation.
std::string corrective_prompt(std::string_view user, std::string_view violation);

struct CurateContext {
    RateLimiter* limiter = nullptr;   // none: no rate limiting
    Clock* clock = nullptr;           // none: steady clock
    std::uint64_t seed = 0;           // backoff jitter, mixed with the entity id
    std::function<void(const TelemetryLine&)> on_call;
    std::function<void(const std::string& entity_id, Clock::time_point issued)> on_issue;
};

/// Renders, sends, parses and validates one entity, retrying per
/// retry_policy up to spec.max_attempts provider calls in total.
EntityResult curate_entity(const TaskSpec& spec, const EntityRecord& record, Provider& provider,
                           const CurateContext& ctx = {});

struct RunOptions {
    Clock* clock = nullptr;
    std::uint64_t seed = 0x5eed;
    /// Also retry entities that carry a failed marker.
    bool retry_failed = false;
    /// Simulated interruption: after this many entities settle, further
    /// results are discarded unpersisted and no new jobs start.
    std::optional<std::size_t> stop_after;
    std::function<void(const std::string& entity_id, Clock::time_point issued)> on_issue;
};

struct RunSummary {
    std::size_t total = 0;
    std::size_t done = 0;       // result files present after this invocation
    std::size_t failed = 0;     // failed markers present after this invocation
    std::size_t processed = 0;  // jobs executed by this invocation
    std::size_t provider_calls = 0;
    Usage usage;                // provider usage of this invocation
    std::chrono::milliseconds wall_time{0};
    bool interrupted = false;
    std::string config_hash;
};

/// Runs one job per pending entity with at most spec.max_parallel in flight
/// and spec.requests_per_minute issuances per 60 s window, persisting each
/// outcome atomically as it settles. Resumes an existing run directory.
RunSummary run_task(const TaskSpec& spec, const EntitySet& entities, Provider& provider,
                    const std::filesystem::path& run_dir, const RunOptions& options = {});

}  // namespace curate
