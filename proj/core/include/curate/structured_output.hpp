#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/error.hpp"
#include "curate/task_config.hpp"
#include "curate/value.hpp"

namespace curate {

enum class AttributeStatus { Found, NotFound };

std::string_view to_string(AttributeStatus status);

struct AttributeResult {
    std::string attribute;
    AttributeStatus status = AttributeStatus::NotFound;
    std::optional<Value> value;  // present iff status == Found
    std::vector<std::string> evidence_urls;

    friend bool operator==(const AttributeResult&, const AttributeResult&) = default;
};

enum class OutputErrorKind { InvalidJson, SchemaViolation, InconsistentStatus };

using OutputError = KindedError<OutputErrorKind>;

/// Strictly validates a model reply against the task's output schema: every
/// attribute present exactly once, no extra keys, typed values, years in
/// [1000, 2100], calendar-valid ISO dates. Results follow attribute order.
std::vector<AttributeResult> parse_structured_output(std::string_view raw_text, const TaskSpec& spec);

nlohmann::json attribute_result_to_json(const AttributeResult& r);
AttributeResult attribute_result_from_json(const std::string& attribute, const nlohmann::json& j,
                                           const AttributeSpec& spec);

}  // namespace curate
