#include "curate/provider.hpp"

#include <array>

#include "curate/hash.hpp"

namespace curate {

namespace {

constexpr std::array<std::pair<ProviderErrorKind, std::string_view>, 7> kErrorNames{{
    {ProviderErrorKind::RateLimited, "rate_limited"},
    {ProviderErrorKind::TransientServer, "transient_server"},
    {ProviderErrorKind::NetworkTimeout, "network_timeout"},
    {ProviderErrorKind::AuthFailure, "auth_failure"},
    {ProviderErrorKind::MalformedProviderReply, "malformed_provider_reply"},
    {ProviderErrorKind::Rejected, "rejected"},
    {ProviderErrorKind::FixtureMiss, "fixture_miss"},
}};

nlohmann::json value_schema(const AttributeSpec& a) {
    switch (a.value_kind) {
        case ValueKind::String:
            return {{"type", "string"}};
        case ValueKind::Integer:
            return {{"type", "integer"}};
        case ValueKind::Year:
            return {{"type", "integer"}, {"minimum", kMinYear}, {"maximum", kMaxYear}};
        case ValueKind::Date:
            return {{"type", "string"}, {"format", "date"}};
        case ValueKind::Boolean:
            return {{"type", "boolean"}};
        case ValueKind::Enum:
            return {{"type", "string"}, {"enum", a.enum_choices}};
    }
    return {{"type", "string"}};
}

}  // namespace

std::string_view to_string(ProviderErrorKind kind) {
    for (const auto& [k, name] : kErrorNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<ProviderErrorKind> parse_provider_error_kind(std::string_view text) {
    for (const auto& [k, name] : kErrorNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

nlohmann::json usage_to_json(const Usage& u) {
    return {{"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}, {"search_calls", u.search_calls}};
}

Usage usage_from_json(const nlohmann::json& j) {
    Usage u;
    u.input_tokens = j.at("input_tokens").get<std::int64_t>();
    u.output_tokens = j.at("output_tokens").get<std::int64_t>();
    u.search_calls = j.at("search_calls").get<std::int64_t>();
    if (u.input_tokens < 0 || u.output_tokens < 0 || u.search_calls < 0) {
        throw std::invalid_argument("usage counts must be non-negative");
    }
    return u;
}

std::string request_key(const CurationRequest& r) {
    const nlohmann::json canonical = {
        {"model_id", r.model_id},
        {"system", r.system},
        {"user", r.user},
        {"schema", r.output_schema.json},
        {"search_enabled", r.search_enabled},
        {"max_output_tokens", r.max_output_tokens},
    };
    return sha256_hex(canonical.dump());
}

nlohmann::json request_summary(const CurationRequest& r) {
    return {
        {"model_id", r.model_id},
        {"search_enabled", r.search_enabled},
        {"max_output_tokens", r.max_output_tokens},
        {"system", r.system},
        {"user", r.user},
        {"schema_sha256", sha256_hex(r.output_schema.json.dump())},
    };
}

SchemaDoc build_output_schema(const TaskSpec& spec) {
    nlohmann::json properties = nlohmann::json::object();
    nlohmann::json required = nlohmann::json::array();
    for (const auto& a : spec.attributes) {
        nlohmann::json status = {{"type", "string"}};
        status["enum"] = a.allow_not_found ? nlohmann::json{"found", "not_found"} : nlohmann::json{"found"};
        nlohmann::json entry = {
            {"type", "object"},
            {"additionalProperties", false},
            {"properties", {{"status", status}, {"value", value_schema(a)}}},
        };
        entry["required"] = a.allow_not_found ? nlohmann::json{"status"} : nlohmann::json{"status", "value"};
        if (spec.request_evidence_urls) {
            entry["properties"]["evidence_urls"] = {{"type", "array"}, {"items", {{"type", "string"}}}};
        }
        properties[a.name] = std::move(entry);
        required.push_back(a.name);
    }
    return SchemaDoc{{
        {"type", "object"},
        {"additionalProperties", false},
        {"properties", std::move(properties)},
        {"required", std::move(required)},
    }};
}

CurationRequest make_curation_request(const TaskSpec& spec, const PromptBundle& prompt) {
    return CurationRequest{
        .model_id = spec.model_id,
        .system = prompt.system,
        .user = prompt.user,
        .output_schema = prompt.output_schema,
        .search_enabled = spec.search_enabled,
        .max_output_tokens = spec.max_output_tokens,
    };
}

}  // namespace curate
