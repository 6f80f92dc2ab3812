#include "curate/structured_output.hpp"

namespace curate {

namespace {

using Kind = OutputErrorKind;

[[noreturn]] void violation(const std::string& attribute, const std::string& detail) {
    throw OutputError(Kind::SchemaViolation, attribute,
                      "schema violation" + (attribute.empty() ? std::string() : " in '" + attribute + "'") + ": " + detail);
}

AttributeResult parse_entry(const AttributeSpec& spec, const nlohmann::json& entry, bool evidence_allowed) {
    const std::string& name = spec.name;
    if (!entry.is_object()) violation(name, "expected an object");
    for (const auto& [key, _] : entry.items()) {
        if (key != "status" && key != "value" && !(evidence_allowed && key == "evidence_urls")) {
            violation(name, "unexpected key '" + key + "'");
        }
    }
    if (!entry.contains("status") || !entry.at("status").is_string()) violation(name, "missing string 'status'");

    AttributeResult result;
    result.attribute = name;
    const auto status = entry.at("status").get<std::string>();
    if (status == "found") {
        result.status = AttributeStatus::Found;
    } else if (status == "not_found") {
        if (!spec.allow_not_found) violation(name, "status not_found is not allowed for this attribute");
        result.status = AttributeStatus::NotFound;
    } else {
        violation(name, "status must be found or not_found, got '" + status + "'");
    }

    const bool has_value = entry.contains("value") && !entry.at("value").is_null();
    if (result.status == AttributeStatus::NotFound) {
        if (has_value) {
            throw OutputError(Kind::InconsistentStatus, name,
                              "inconsistent status in '" + name + "': not_found with a value");
        }
    } else {
        if (!has_value) violation(name, "status found without a value");
        Value v;
        if (auto err = value_from_json(spec.value_kind, spec.enum_choices, entry.at("value"), v)) violation(name, *err);
        result.value = std::move(v);
    }

    if (entry.contains("evidence_urls")) {
        const auto& urls = entry.at("evidence_urls");
        if (!urls.is_array()) violation(name, "evidence_urls must be a list of strings");
        for (const auto& u : urls) {
            if (!u.is_string()) violation(name, "evidence_urls must be a list of strings");
            result.evidence_urls.push_back(u.get<std::string>());
        }
    }
    return result;
}

}  // namespace

std::string_view to_string(AttributeStatus status) {
    return status == AttributeStatus::Found ? "found" : "not_found";
}

std::vector<AttributeResult> parse_structured_output(std::string_view raw_text, const TaskSpec& spec) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw OutputError(Kind::InvalidJson, "", std::string("reply is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) violation("", "top level must be an object");
    for (const auto& [key, _] : doc.items()) {
        if (spec.find_attribute(key) == nullptr) violation(key, "unknown attribute");
    }
    std::vector<AttributeResult> results;
    results.reserve(spec.attributes.size());
    for (const auto& attr : spec.attributes) {
        if (!doc.contains(attr.name)) violation(attr.name, "attribute missing from reply");
        results.push_back(parse_entry(attr, doc.at(attr.name), spec.request_evidence_urls));
    }
    return results;
}

nlohmann::json attribute_result_to_json(const AttributeResult& r) {
    nlohmann::json j = {{"status", std::string(to_string(r.status))}};
    if (r.value) j["value"] = value_to_json(*r.value);
    if (!r.evidence_urls.empty()) j["evidence_urls"] = r.evidence_urls;
    return j;
}

AttributeResult attribute_result_from_json(const std::string& attribute, const nlohmann::json& j,
                                           const AttributeSpec& spec) {
    auto parsed = parse_entry(spec, j, true);
    parsed.attribute = attribute;
    return parsed;
}

}  // namespace curate
