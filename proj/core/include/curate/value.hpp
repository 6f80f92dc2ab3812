#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace curate {

enum class ValueKind { String, Integer, Year, Date, Boolean, Enum };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> parse_value_kind(std::string_view text);

/// A curated cell value. Integer and Year hold int64; Boolean holds bool;
/// String, Enum and Date hold text (dates in canonical YYYY-MM-DD form).
using Value = std::variant<bool, std::int64_t, std::string>;

inline constexpr std::int64_t kMinYear = 1000;
inline constexpr std::int64_t kMaxYear = 2100;

/// True when text is a valid proleptic-Gregorian calendar date YYYY-MM-DD.
bool is_iso_date(std::string_view text);

/// Checks a JSON value against a kind. Returns an error description, or an
/// empty optional with `out` filled on success.
std::optional<std::string> value_from_json(ValueKind kind, const std::vector<std::string>& choices,
                                           const nlohmann::json& j, Value& out);

nlohmann::json value_to_json(const Value& value);

/// Flat text form used in CSV cells: "true"/"false", decimal integers, raw text.
std::string value_to_text(const Value& value);

/// Inverse of value_to_text for a given kind; same validation rules as JSON.
std::optional<std::string> value_from_text(ValueKind kind, const std::vector<std::string>& choices,
                                           std::string_view text, Value& out);

}  // namespace curate
