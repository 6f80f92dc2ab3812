#pragma once

#include <chrono>
#include <mutex>

namespace curate {

/// Monotonic time source the scheduler and limiter sleep against.
class Clock {
public:
    using duration = std::chrono::milliseconds;
    using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

    virtual ~Clock() = default;
    virtual time_point now() const = 0;
    virtual void sleep_until(time_point t) = 0;
    void sleep_for(duration d) { sleep_until(now() + d); }
};

class SteadyClock final : public Clock {
public:
    time_point now() const override;
    void sleep_until(time_point t) override;
};

/// Virtual time for tests: sleeping advances the clock instead of blocking.
/// Time only moves forward, so concurrent sleepers see a monotonic clock.
class ManualClock final : public Clock {
public:
    time_point now() const override;
    void sleep_until(time_point t) override;
    void advance(duration d);

private:
    mutable std::mutex mutex_;
    time_point now_{};
};

}  // namespace curate
