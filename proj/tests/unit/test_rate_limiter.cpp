#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "curate/rate_limiter.hpp"

using namespace curate;
using std::chrono::milliseconds;

namespace {

constexpr Clock::duration kWindow = std::chrono::seconds(60);

/// Every run of `limit + 1` consecutive sorted issuances spans at least one
/// window, i.e. no half-open window holds more than `limit`.
bool window_respected(std::vector<Clock::time_point> times, int limit) {
    std::sort(times.begin(), times.end());
    for (std::size_t i = 0; i + limit < times.size(); ++i) {
        if (times[i + limit] - times[i] < kWindow) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("rate_limiter") {
    TEST_CASE("the first burst is immediate and the next waits a window") {
        ManualClock clock;
        RateLimiter limiter(3, clock);
        const auto t0 = clock.now();
        CHECK(limiter.acquire() == t0);
        CHECK(limiter.acquire() == t0);
        CHECK(limiter.acquire() == t0);
        CHECK(limiter.acquire() == t0 + kWindow);
        CHECK(clock.now() == t0 + kWindow);
    }

    TEST_CASE("random arrival patterns never exceed the window limit") {
        std::mt19937_64 rng(2024);
        for (int trial = 0; trial < 200; ++trial) {
            const int rpm = std::uniform_int_distribution<int>(1, 40)(rng);
            ManualClock clock;
            RateLimiter limiter(rpm, clock);
            std::vector<Clock::time_point> issued;
            std::vector<Clock::time_point> oracle;
            const int n = std::uniform_int_distribution<int>(1, 200)(rng);
            for (int i = 0; i < n; ++i) {
                clock.advance(milliseconds(std::uniform_int_distribution<int>(0, 4000)(rng)));
                const auto arrival = clock.now();
                issued.push_back(limiter.acquire());
                auto expect = arrival;
                if (!oracle.empty()) expect = std::max(expect, oracle.back());
                if (static_cast<int>(oracle.size()) >= rpm) expect = std::max(expect, oracle[oracle.size() - rpm] + kWindow);
                oracle.push_back(expect);
            }
            CAPTURE(rpm);
            CHECK(window_respected(issued, rpm));
            CHECK(issued == oracle);
        }
    }

    TEST_CASE("sustained demand reaches exactly the configured rate") {
        ManualClock clock;
        RateLimiter limiter(500, clock);
        std::vector<Clock::time_point> issued;
        for (int i = 0; i < 1500; ++i) issued.push_back(limiter.acquire());
        CHECK(issued[499] - issued[0] < kWindow);
        CHECK(issued[500] - issued[0] == kWindow);
        CHECK(issued[1499] - issued[0] == 2 * kWindow);
        CHECK(window_respected(issued, 500));
    }

    TEST_CASE("many threads share one limiter") {
        ManualClock clock;
        RateLimiter limiter(7, clock);
        std::mutex mutex;
        std::vector<Clock::time_point> issued;
        {
            std::vector<std::jthread> threads;
            for (int t = 0; t < 8; ++t) {
                threads.emplace_back([&] {
                    for (int i = 0; i < 25; ++i) {
                        const auto at = limiter.acquire();
                        std::lock_guard lock(mutex);
                        issued.push_back(at);
                    }
                });
            }
        }
        CHECK(issued.size() == 200);
        CHECK(window_respected(issued, 7));
    }

    TEST_CASE("non-positive limits are rejected") {
        ManualClock clock;
        CHECK_THROWS(RateLimiter(0, clock));
        CHECK_THROWS(RateLimiter(-1, clock));
    }
}
