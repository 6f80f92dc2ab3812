#pragma once

#include <cstddef>
#include <deque>
#include <mutex>

#include "curate/clock.hpp"

namespace curate {

/// Token bucket of `requests_per_window` tokens where a spent token comes
/// back exactly one window after the issuance that spent it. Any half-open
/// interval [t, t + window) therefore contains at most requests_per_window
/// issuances. Safe to share between threads.
class RateLimiter {
public:
    RateLimiter(int requests_per_window, Clock& clock, Clock::duration window = std::chrono::seconds(60));

    /// Blocks (via the clock) until a token is available, consumes it and
    /// returns the issuance time.
    Clock::time_point acquire();

    int capacity() const { return capacity_; }

private:
    int capacity_;
    Clock& clock_;
    Clock::duration window_;
    std::mutex mutex_;
    std::deque<Clock::time_point> issued_;  // last `capacity_` issuance times
};

}  // namespace curate
