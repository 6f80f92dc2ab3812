#pragma once

#include <chrono>
#include <optional>
#include <random>

namespace curate {

/// Failure classes the retry policy distinguishes.
enum class FailureClass {
    RateLimited,
    TransientServer,
    NetworkTimeout,
    MalformedOutput,  // MalformedProviderReply, InvalidJson, SchemaViolation, InconsistentStatus
    AuthFailure,
    NonRetryable,     // rejected requests, fixture misses
};

struct Failure {
    FailureClass cls = FailureClass::NonRetryable;
    std::optional<std::chrono::milliseconds> retry_after;
};

struct RetryAction {
    enum class Kind { Retry, Fail };

    Kind kind = Kind::Fail;
    std::chrono::milliseconds delay{0};
    bool corrective = false;  // append the corrective suffix before retrying

    bool retry() const { return kind == Kind::Retry; }
};

inline constexpr std::chrono::milliseconds kBackoffBase{1000};
inline constexpr std::chrono::milliseconds kBackoffCap{60000};

/// Rate limits and transient server/network errors back off exponentially
/// (base 1 s, factor 2, full jitter, cap 60 s); a provider retry-after hint
/// replaces the jittered delay, still capped. Malformed output retries
/// immediately with a corrective prompt. Auth and non-retryable failures fail.
/// `attempt` is the 1-based number of the attempt that just failed.
RetryAction retry_policy(const Failure& failure, int attempt, std::mt19937_64& rng);

}  // namespace curate
