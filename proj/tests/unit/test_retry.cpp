#include <doctest.h>

#include <random>

#include "curate/engine.hpp"
#include "curate/retry.hpp"
#include "support.hpp"

using namespace curate;
using namespace curate::testing;
using std::chrono::milliseconds;

TEST_SUITE("retry") {
    TEST_CASE("a retry-after hint sets the delay") {
        std::mt19937_64 rng(1);
        const auto a = retry_policy({FailureClass::RateLimited, milliseconds(7000)}, 1, rng);
        CHECK(a.retry());
        CHECK(a.delay == milliseconds(7000));
        CHECK_FALSE(a.corrective);
        CHECK(retry_policy({FailureClass::RateLimited, milliseconds(3'600'000)}, 1, rng).delay == kBackoffCap);
    }

    TEST_CASE("auth and non-retryable failures fail at once") {
        std::mt19937_64 rng(1);
        for (int attempt = 1; attempt <= 5; ++attempt) {
            CHECK_FALSE(retry_policy({FailureClass::AuthFailure, {}}, attempt, rng).retry());
            CHECK_FALSE(retry_policy({FailureClass::NonRetryable, milliseconds(10)}, attempt, rng).retry());
        }
    }

    TEST_CASE("malformed output retries immediately with a corrective prompt") {
        std::mt19937_64 rng(1);
        const auto a = retry_policy({FailureClass::MalformedOutput, {}}, 2, rng);
        CHECK(a.retry());
        CHECK(a.corrective);
        CHECK(a.delay == milliseconds(0));
        const auto text = corrective_prompt("question", "schema violation in 'x'");
        CHECK(text.rfind("question", 0) == 0);
        CHECK(text.find("schema violation in 'x'") != std::string::npos);
    }

    TEST_CASE("backoff stays within the exponential ceiling") {
        std::mt19937_64 rng(42);
        std::uniform_int_distribution<int> attempt_dist(1, 30);
        for (int trial = 0; trial < 5000; ++trial) {
            const int attempt = attempt_dist(rng);
            const auto cls = std::array{FailureClass::RateLimited, FailureClass::TransientServer,
                                        FailureClass::NetworkTimeout}[trial % 3];
            const auto a = retry_policy({cls, {}}, attempt, rng);
            long long ceiling = 1000;
            for (int i = 1; i < attempt && ceiling < 60000; ++i) ceiling *= 2;
            ceiling = std::min(ceiling, 60000LL);
            CHECK(a.retry());
            CHECK(a.delay.count() >= 0);
            CHECK(a.delay.count() <= ceiling);
        }
        CHECK(retry_policy({FailureClass::TransientServer, {}}, 3, rng).delay <= milliseconds(60000));
    }

    TEST_CASE("jitter spreads over the whole ceiling") {
        std::mt19937_64 rng(7);
        std::int64_t lo = std::int64_t{1} << 30, hi = 0;
        for (int i = 0; i < 2000; ++i) {
            const auto d = retry_policy({FailureClass::TransientServer, {}}, 3, rng).delay.count();
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        CHECK(lo < 400);
        CHECK(hi > 3600);
        CHECK(hi <= 4000);
    }

    TEST_CASE("the engine retries a rate-limited call after the hinted delay") {
        const auto spec = parse_task_spec(data_file("nobel/task.yaml"));
        const auto set = parse_entity_set(data_file("nobel/entities.csv"), spec);
        ManualClock clock;
        int calls = 0;
        FunctionProvider provider([&](const CurationRequest& r) -> ProviderResponse {
            if (++calls == 1) throw ProviderError(ProviderErrorKind::RateLimited, "", "slow down", milliseconds(7000));
            return reply(r, R"({"is_alive":{"status":"found","value":true},"death_date":{"status":"not_found"}})");
        });
        CurateContext ctx;
        ctx.clock = &clock;
        const auto start = clock.now();
        const auto result = curate_entity(spec, set.rows[0], provider, ctx);
        CHECK(result.attempts == 2);
        CHECK(clock.now() - start == milliseconds(7000));
    }

    TEST_CASE("corrective retries extend the original prompt once") {
        const auto spec = parse_task_spec(data_file("nobel/task.yaml"));
        const auto set = parse_entity_set(data_file("nobel/entities.csv"), spec);
        std::vector<std::string> users;
        FunctionProvider provider([&](const CurationRequest& r) {
            users.push_back(r.user);
            if (users.size() < 3) return reply(r, "prose");
            return reply(r, R"({"is_alive":{"status":"found","value":true},"death_date":{"status":"not_found"}})");
        });
        const auto result = curate_entity(spec, set.rows[0], provider);
        CHECK(result.attempts == 3);
        REQUIRE(users.size() == 3);
        CHECK(users[1].rfind(users[0], 0) == 0);
        CHECK(users[1] != users[0]);
        CHECK(users[2].rfind(users[0], 0) == 0);
        CHECK(users[2].size() == users[1].size());
    }
}
