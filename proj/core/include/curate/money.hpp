#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "curate/error.hpp"

namespace curate {

/// Dollar amount held as an exact count of micro-dollars.
class Money {
public:
    constexpr Money() = default;
    static constexpr Money from_micros(std::int64_t micros) { return Money(micros); }

    /// Parses "20", "0.66", "$1.25", "0.000125" (at most six decimals).
    /// Throws InvalidMoney on anything else, including negatives.
    static Money parse(std::string_view text);

    constexpr std::int64_t micros() const { return micros_; }

    /// "$0.67": rounds half-up to whole cents.
    std::string to_cents() const;
    /// "$0.66": truncates to whole cents.
    std::string to_cents_floor() const;
    /// "$0.666666": full micro-dollar precision.
    std::string to_micros_string() const;
    /// "0.666666": plain decimal, as stored in configs.
    std::string to_decimal() const;

    constexpr Money& operator+=(Money other) {
        micros_ += other.micros_;
        return *this;
    }
    friend constexpr Money operator+(Money a, Money b) { return a += b; }
    friend constexpr auto operator<=>(Money, Money) = default;

private:
    constexpr explicit Money(std::int64_t micros) : micros_(micros) {}
    std::int64_t micros_ = 0;
};

class InvalidMoney : public Error {
public:
    using Error::Error;
};

}  // namespace curate
