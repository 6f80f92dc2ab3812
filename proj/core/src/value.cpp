#include "curate/value.hpp"

#include <array>
#include <charconv>

namespace curate {

namespace {

constexpr std::array<std::pair<ValueKind, std::string_view>, 6> kKindNames{{
    {ValueKind::String, "string"},
    {ValueKind::Integer, "integer"},
    {ValueKind::Year, "year"},
    {ValueKind::Date, "date"},
    {ValueKind::Boolean, "boolean"},
    {ValueKind::Enum, "enum"},
}};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

std::optional<std::string> check_string_kind(ValueKind kind, const std::vector<std::string>& choices,
                                             std::string text, Value& out) {
    if (kind == ValueKind::Date && !is_iso_date(text)) {
        return "'" + text + "' is not a valid YYYY-MM-DD date";
    }
    if (kind == ValueKind::Enum) {
        bool ok = false;
        for (const auto& c : choices) ok = ok || c == text;
        if (!ok) return "'" + text + "' is not one of the allowed choices";
    }
    out = std::move(text);
    return std::nullopt;
}

std::optional<std::string> check_integer_kind(ValueKind kind, std::int64_t v, Value& out) {
    if (kind == ValueKind::Year && (v < kMinYear || v > kMaxYear)) {
        return "year " + std::to_string(v) + " outside [1000, 2100]";
    }
    out = v;
    return std::nullopt;
}

}  // namespace

std::string_view to_string(ValueKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "string";
}

std::optional<ValueKind> parse_value_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int y = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    const int m = (s[5] - '0') * 10 + (s[6] - '0');
    const int d = (s[8] - '0') * 10 + (s[9] - '0');
    if (m < 1 || m > 12 || d < 1) return false;
    static constexpr std::array<int, 12> days{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const int limit = (m == 2 && is_leap(y)) ? 29 : days[m - 1];
    return d <= limit;
}

std::optional<std::string> value_from_json(ValueKind kind, const std::vector<std::string>& choices,
                                           const nlohmann::json& j, Value& out) {
    switch (kind) {
        case ValueKind::Boolean:
            if (!j.is_boolean()) return "expected a boolean";
            out = j.get<bool>();
            return std::nullopt;
        case ValueKind::Integer:
        case ValueKind::Year:
            if (!j.is_number_integer()) return "expected an integer";
            return check_integer_kind(kind, j.get<std::int64_t>(), out);
        case ValueKind::String:
        case ValueKind::Date:
        case ValueKind::Enum:
            if (!j.is_string()) return "expected a string";
            return check_string_kind(kind, choices, j.get<std::string>(), out);
    }
    return "unknown kind";
}

nlohmann::json value_to_json(const Value& value) {
    return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

std::string value_to_text(const Value& value) {
    if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
    if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
    return std::get<std::string>(value);
}

std::optional<std::string> value_from_text(ValueKind kind, const std::vector<std::string>& choices,
                                           std::string_view text, Value& out) {
    switch (kind) {
        case ValueKind::Boolean:
            if (text == "true") out = true;
            else if (text == "false") out = false;
            else return "expected true or false, got '" + std::string(text) + "'";
            return std::nullopt;
        case ValueKind::Integer:
        case ValueKind::Year: {
            std::int64_t v = 0;
            const auto* first = text.data();
            const auto* last = text.data() + text.size();
            if (!text.empty() && *first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (text.empty() || ec != std::errc{} || ptr != last) {
                return "expected an integer, got '" + std::string(text) + "'";
            }
            return check_integer_kind(kind, v, out);
        }
        case ValueKind::String:
        case ValueKind::Date:
        case ValueKind::Enum:
            return check_string_kind(kind, choices, std::string(text), out);
    }
    return "unknown kind";
}

}  // namespace curate
