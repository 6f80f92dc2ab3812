#include "curate/rate_limiter.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace curate {

Clock::time_point SteadyClock::now() const {
    return std::chrono::time_point_cast<duration>(std::chrono::steady_clock::now());
}

void SteadyClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

Clock::time_point ManualClock::now() const {
    std::lock_guard lock(mutex_);
    return now_;
}

void ManualClock::sleep_until(time_point t) {
    std::lock_guard lock(mutex_);
    now_ = std::max(now_, t);
}

void ManualClock::advance(duration d) {
    std::lock_guard lock(mutex_);
    now_ += d;
}

RateLimiter::RateLimiter(int requests_per_window, Clock& clock, Clock::duration window)
    : capacity_(requests_per_window), clock_(clock), window_(window) {
    if (requests_per_window <= 0) throw std::invalid_argument("rate limit must be positive");
}

Clock::time_point RateLimiter::acquire() {
    Clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        slot = clock_.now();
        if (!issued_.empty()) slot = std::max(slot, issued_.back());
        if (static_cast<int>(issued_.size()) == capacity_) {
            slot = std::max(slot, issued_.front() + window_);
            issued_.pop_front();
        }
        issued_.push_back(slot);
    }
    clock_.sleep_until(slot);
    return slot;
}

}  // namespace curate
