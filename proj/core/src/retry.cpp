#include "curate/retry.hpp"

#include <algorithm>

namespace curate {

RetryAction retry_policy(const Failure& failure, int attempt, std::mt19937_64& rng) {
    switch (failure.cls) {
        case FailureClass::RateLimited:
        case FailureClass::TransientServer:
        case FailureClass::NetworkTimeout: {
            if (failure.retry_after) {
                return {RetryAction::Kind::Retry, std::clamp(*failure.retry_after, std::chrono::milliseconds(0), kBackoffCap), false};
            }
            const int shift = std::clamp(attempt - 1, 0, 20);
            const std::chrono::milliseconds ceiling = std::min(kBackoffCap, std::chrono::milliseconds(kBackoffBase.count() << shift));
            std::uniform_int_distribution<long long> jitter(0, ceiling.count());
            return {RetryAction::Kind::Retry, std::chrono::milliseconds(jitter(rng)), false};
        }
        case FailureClass::MalformedOutput:
            return {RetryAction::Kind::Retry, std::chrono::milliseconds(0), true};
        case FailureClass::AuthFailure:
        case FailureClass::NonRetryable:
            return {RetryAction::Kind::Fail, std::chrono::milliseconds(0), false};
    }
    return {};
}

}  // namespace curate
