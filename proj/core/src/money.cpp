#include "curate/money.hpp"

#include <cstdio>
#include <limits>

namespace curate {

namespace {

std::string format_dollars(std::int64_t whole, std::int64_t frac, int digits) {
    char buf[64];
    if (digits == 0) {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(whole));
    } else {
        std::snprintf(buf, sizeof buf, "%lld.%0*lld", static_cast<long long>(whole), digits,
                      static_cast<long long>(frac));
    }
    return buf;
}

}  // namespace

Money Money::parse(std::string_view text) {
    const std::string original(text);
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.starts_with('$')) text.remove_prefix(1);
    if (text.empty()) throw InvalidMoney("empty money amount");

    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool seen_point = false;
    bool seen_digit = false;
    for (char c : text) {
        if (c == '.' && !seen_point) {
            seen_point = true;
            continue;
        }
        if (c < '0' || c > '9') throw InvalidMoney("invalid money amount '" + original + "'");
        seen_digit = true;
        if (seen_point) {
            if (++frac_digits > 6) {
                throw InvalidMoney("more than six decimals in '" + original + "'");
            }
            frac = frac * 10 + (c - '0');
        } else {
            if (whole > (std::numeric_limits<std::int64_t>::max() / 1'000'000 - 9) / 10) {
                throw InvalidMoney("money amount too large '" + original + "'");
            }
            whole = whole * 10 + (c - '0');
        }
    }
    if (!seen_digit) throw InvalidMoney("invalid money amount '" + original + "'");
    for (int i = frac_digits; i < 6; ++i) frac *= 10;
    return Money(whole * 1'000'000 + frac);
}

std::string Money::to_cents() const {
    const std::int64_t cents = (micros_ + 5'000) / 10'000;
    return "$" + format_dollars(cents / 100, cents % 100, 2);
}

std::string Money::to_cents_floor() const {
    const std::int64_t cents = micros_ / 10'000;
    return "$" + format_dollars(cents / 100, cents % 100, 2);
}

std::string Money::to_micros_string() const { return "$" + to_decimal(); }

std::string Money::to_decimal() const {
    return format_dollars(micros_ / 1'000'000, micros_ % 1'000'000, 6);
}

}  // namespace curate
