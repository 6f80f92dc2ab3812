#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/error.hpp"
#include "curate/money.hpp"
#include "curate/schema.hpp"
#include "curate/value.hpp"

namespace curate {

enum class ConfigErrorKind {
    MalformedYaml,
    MissingField,
    UnknownKey,
    InvalidValue,
    DuplicateAttribute,
    DuplicateKeyColumn,
    UnknownValueKind,
    InvalidPlaceholder,
    MalformedCsv,
    MissingColumn,
    DuplicateEntityId,
    EmptyEntitySet,
};

using ConfigError = KindedError<ConfigErrorKind>;

struct PricingTable {
    Money input_per_million_tokens;
    Money output_per_million_tokens;
    Money per_search_call;

    friend bool operator==(const PricingTable&, const PricingTable&) = default;
};

struct AttributeSpec {
    std::string name;
    std::string question_template;
    ValueKind value_kind = ValueKind::String;
    std::vector<std::string> enum_choices;  // non-empty iff value_kind == Enum
    bool allow_not_found = true;

    friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

struct TaskSpec {
    std::string task_name;
    std::string system_prompt;
    std::vector<std::string> entity_key_columns;
    std::vector<AttributeSpec> attributes;

    // model:
    std::string model_id;
    std::string api = "responses";  // vendor adapter name
    bool search_enabled = true;
    bool request_evidence_urls = false;
    int max_output_tokens = 0;

    // execution:
    int max_parallel = 0;
    int requests_per_minute = 0;
    int max_attempts = 3;

    PricingTable pricing;

    const AttributeSpec* find_attribute(std::string_view name) const;

    /// Key columns followed by every placeholder column, first-seen order.
    std::vector<std::string> required_columns() const;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

TaskSpec parse_task_spec(std::string_view yaml_text);

/// Emits YAML that parse_task_spec reads back to an equal TaskSpec.
std::string serialize_task_spec(const TaskSpec& spec);

struct EntityRecord {
    std::string entity_id;
    std::map<std::string, std::string, std::less<>> fields;

    const std::string& at(std::string_view column) const;
    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct EntitySet {
    std::vector<std::string> columns;
    std::vector<EntityRecord> rows;

    const EntityRecord* find(std::string_view entity_id) const;
    friend bool operator==(const EntitySet&, const EntitySet&) = default;
};

EntitySet parse_entity_set(std::string_view csv_text, const TaskSpec& spec);

/// Canonical CSV form of the set (header then rows, LF endings).
std::string serialize_entity_set(const EntitySet& set);

/// Joins key-column values with '|'.
std::string make_entity_id(const std::vector<std::string>& key_values);

struct PromptBundle {
    std::string system;
    std::string user;
    SchemaDoc output_schema;

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

PromptBundle render_prompt(const TaskSpec& spec, const EntityRecord& record);

/// Placeholder names in order of appearance. A placeholder is '{' followed by
/// an identifier ([A-Za-z_][A-Za-z0-9_]*) and '}'. A '{' followed by any other
/// character is literal text. Throws InvalidPlaceholder for a '{' that starts
/// an identifier but is not closed by '}' right after it.
std::vector<std::string> find_placeholders(std::string_view text);

/// Single-pass substitution: replacement text is never rescanned.
std::string substitute_placeholders(std::string_view text, const EntityRecord& record);

}  // namespace curate
