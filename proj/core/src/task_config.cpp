#include "curate/task_config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "curate/csv.hpp"
#include "curate/provider.hpp"

namespace curate {

namespace {

using Kind = ConfigErrorKind;

[[noreturn]] void fail(Kind kind, const std::string& subject, const std::string& message) {
    throw ConfigError(kind, subject, message);
}

bool is_identifier(std::string_view s) {
    if (s.empty() || s.front() < 'a' || s.front() > 'z') return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

bool is_placeholder_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

bool is_placeholder_char(char c) { return is_placeholder_start(c) || (c >= '0' && c <= '9'); }

// Reads a mapping and rejects keys outside `allowed`.
class MapReader {
public:
    MapReader(const YAML::Node& node, std::string path, std::initializer_list<std::string_view> allowed)
        : node_(node), path_(std::move(path)) {
        if (!node_.IsMap()) fail(Kind::InvalidValue, path_, path_ + ": expected a mapping");
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                fail(Kind::UnknownKey, qualified(key), "unknown key '" + qualified(key) + "'");
            }
        }
    }

    bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

    YAML::Node required(const std::string& key) const {
        YAML::Node child = node_[key];
        if (!child || child.IsNull()) fail(Kind::MissingField, qualified(key), "missing field '" + qualified(key) + "'");
        return child;
    }

    std::string string(const std::string& key) const {
        auto child = required(key);
        if (!child.IsScalar()) fail(Kind::InvalidValue, qualified(key), qualified(key) + ": expected a scalar");
        return child.as<std::string>();
    }

    std::optional<std::string> optional_string(const std::string& key) const {
        if (!has(key) || node_[key].IsNull()) return std::nullopt;
        return string(key);
    }

    int positive_int(const std::string& key) const { return to_positive_int(key, string(key)); }

    int positive_int_or(const std::string& key, int fallback) const {
        auto s = optional_string(key);
        return s ? to_positive_int(key, *s) : fallback;
    }

    bool boolean_or(const std::string& key, bool fallback) const {
        auto s = optional_string(key);
        if (!s) return fallback;
        if (*s == "true") return true;
        if (*s == "false") return false;
        fail(Kind::InvalidValue, qualified(key), qualified(key) + ": expected true or false");
    }

    Money money(const std::string& key) const {
        try {
            return Money::parse(string(key));
        } catch (const InvalidMoney& e) {
            fail(Kind::InvalidValue, qualified(key), qualified(key) + ": " + e.what());
        }
    }

    std::vector<std::string> string_list(const std::string& key) const {
        auto child = required(key);
        if (!child.IsSequence()) fail(Kind::InvalidValue, qualified(key), qualified(key) + ": expected a list");
        std::vector<std::string> out;
        for (const auto& item : child) {
            if (!item.IsScalar()) fail(Kind::InvalidValue, qualified(key), qualified(key) + ": expected scalars");
            out.push_back(item.as<std::string>());
        }
        return out;
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    int to_positive_int(const std::string& key, const std::string& text) const {
        int v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size() || v <= 0) {
            fail(Kind::InvalidValue, qualified(key), qualified(key) + ": expected a positive integer, got '" + text + "'");
        }
        return v;
    }

    YAML::Node node_;
    std::string path_;
};

void check_placeholders(const TaskSpec& spec, std::string_view text) {
    for (const auto& name : find_placeholders(text)) {
        if (spec.find_attribute(name) != nullptr) {
            fail(Kind::InvalidPlaceholder, name,
                 "placeholder {" + name + "} names an attribute, not an entity column");
        }
    }
}

}  // namespace

const AttributeSpec* TaskSpec::find_attribute(std::string_view name) const {
    for (const auto& a : attributes) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

std::vector<std::string> TaskSpec::required_columns() const {
    std::vector<std::string> cols = entity_key_columns;
    auto add = [&](std::string_view text) {
        for (auto& name : find_placeholders(text)) {
            if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(std::move(name));
        }
    };
    add(system_prompt);
    for (const auto& a : attributes) add(a.question_template);
    return cols;
}

std::vector<std::string> find_placeholders(std::string_view text) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{' || i + 1 >= text.size() || !is_placeholder_start(text[i + 1])) continue;
        std::size_t j = i + 1;
        while (j < text.size() && is_placeholder_char(text[j])) ++j;
        const std::string name(text.substr(i + 1, j - i - 1));
        if (j >= text.size() || text[j] != '}') {
            fail(Kind::InvalidPlaceholder, name,
                 "unterminated placeholder {" + name + " in template '" + std::string(text) + "'");
        }
        names.push_back(name);
        i = j;
    }
    return names;
}

std::string substitute_placeholders(std::string_view text, const EntityRecord& record) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{' || i + 1 >= text.size() || !is_placeholder_start(text[i + 1])) {
            out.push_back(text[i]);
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size() && is_placeholder_char(text[j])) ++j;
        const std::string_view name = text.substr(i + 1, j - i - 1);
        if (j >= text.size() || text[j] != '}') {
            fail(Kind::InvalidPlaceholder, std::string(name),
                 "unterminated placeholder in template '" + std::string(text) + "'");
        }
        auto it = record.fields.find(name);
        if (it == record.fields.end()) {
            fail(Kind::InvalidPlaceholder, std::string(name),
                 "placeholder {" + std::string(name) + "} has no value for entity '" + record.entity_id + "'");
        }
        out += it->second;
        i = j;
    }
    return out;
}

TaskSpec parse_task_spec(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        fail(Kind::MalformedYaml, "", std::string("malformed YAML: ") + e.what());
    }
    if (!root.IsMap()) fail(Kind::MalformedYaml, "", "task descriptor must be a YAML mapping");

    TaskSpec spec;
    try {
        MapReader top(root, "",
                      {"task_name", "system_prompt", "entity_key_columns", "attributes", "model",
                       "execution", "pricing"});
        spec.task_name = top.string("task_name");
        if (!is_identifier(spec.task_name)) {
            fail(Kind::InvalidValue, "task_name", "task_name must match [a-z][a-z0-9_]*");
        }
        spec.system_prompt = top.string("system_prompt");
        spec.entity_key_columns = top.string_list("entity_key_columns");
        if (spec.entity_key_columns.empty()) {
            fail(Kind::MissingField, "entity_key_columns", "entity_key_columns must list at least one column");
        }
        {
            std::set<std::string> seen;
            for (const auto& c : spec.entity_key_columns) {
                if (c.empty()) fail(Kind::InvalidValue, "entity_key_columns", "empty key column name");
                if (!seen.insert(c).second) {
                    fail(Kind::DuplicateKeyColumn, c, "duplicate key column '" + c + "'");
                }
            }
        }

        const YAML::Node attrs = root["attributes"];
        if (!attrs || attrs.IsNull() || (attrs.IsSequence() && attrs.size() == 0)) {
            fail(Kind::MissingField, "attributes", "missing field 'attributes' (at least one attribute required)");
        }
        if (!attrs.IsSequence()) fail(Kind::InvalidValue, "attributes", "attributes: expected a list");
        std::set<std::string> names;
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            MapReader a(attrs[i], "attributes[" + std::to_string(i) + "]",
                        {"name", "question_template", "value_kind", "enum_choices", "allow_not_found"});
            AttributeSpec attr;
            attr.name = a.string("name");
            if (!is_identifier(attr.name)) {
                fail(Kind::InvalidValue, attr.name, "attribute name '" + attr.name + "' must match [a-z][a-z0-9_]*");
            }
            if (!names.insert(attr.name).second) {
                fail(Kind::DuplicateAttribute, attr.name, "duplicate attribute '" + attr.name + "'");
            }
            attr.question_template = a.string("question_template");
            const auto kind_text = a.string("value_kind");
            auto kind = parse_value_kind(kind_text);
            if (!kind) fail(Kind::UnknownValueKind, kind_text, "unknown value_kind '" + kind_text + "'");
            attr.value_kind = *kind;
            if (a.has("enum_choices")) {
                if (attr.value_kind != ValueKind::Enum) {
                    fail(Kind::InvalidValue, attr.name, "enum_choices given for non-enum attribute '" + attr.name + "'");
                }
                attr.enum_choices = a.string_list("enum_choices");
            }
            if (attr.value_kind == ValueKind::Enum) {
                if (attr.enum_choices.empty()) {
                    fail(Kind::MissingField, a.qualified("enum_choices"),
                         "enum attribute '" + attr.name + "' needs non-empty enum_choices");
                }
                std::set<std::string> distinct(attr.enum_choices.begin(), attr.enum_choices.end());
                if (distinct.size() != attr.enum_choices.size()) {
                    fail(Kind::InvalidValue, attr.name, "enum_choices of '" + attr.name + "' are not distinct");
                }
            }
            attr.allow_not_found = a.boolean_or("allow_not_found", true);
            spec.attributes.push_back(std::move(attr));
        }

        MapReader model(top.required("model"), "model",
                        {"id", "api", "search", "evidence_urls", "max_output_tokens"});
        spec.model_id = model.string("id");
        if (spec.model_id.empty()) fail(Kind::MissingField, "model.id", "model.id is empty");
        spec.api = model.optional_string("api").value_or("responses");
        if (spec.api != "responses" && spec.api != "chat") {
            fail(Kind::InvalidValue, "model.api", "model.api must be 'responses' or 'chat'");
        }
        spec.search_enabled = model.boolean_or("search", true);
        spec.request_evidence_urls = model.boolean_or("evidence_urls", false);
        spec.max_output_tokens = model.positive_int("max_output_tokens");

        MapReader exec(top.required("execution"), "execution",
                       {"max_parallel", "requests_per_minute", "max_attempts"});
        spec.max_parallel = exec.positive_int("max_parallel");
        spec.requests_per_minute = exec.positive_int("requests_per_minute");
        spec.max_attempts = exec.positive_int_or("max_attempts", 3);

        MapReader pricing(top.required("pricing"), "pricing",
                          {"input_per_million_tokens", "output_per_million_tokens", "per_search_call"});
        spec.pricing.input_per_million_tokens = pricing.money("input_per_million_tokens");
        spec.pricing.output_per_million_tokens = pricing.money("output_per_million_tokens");
        spec.pricing.per_search_call = pricing.money("per_search_call");
    } catch (const YAML::Exception& e) {
        fail(Kind::MalformedYaml, "", std::string("malformed YAML: ") + e.what());
    }

    check_placeholders(spec, spec.system_prompt);
    for (const auto& a : spec.attributes) check_placeholders(spec, a.question_template);
    (void)spec.required_columns();
    return spec;
}

std::string serialize_task_spec(const TaskSpec& spec) {
    YAML::Emitter out;
    auto str = [&](const std::string& s) -> YAML::Emitter& { return out << YAML::DoubleQuoted << s; };

    out << YAML::BeginMap;
    out << YAML::Key << "task_name" << YAML::Value;
    str(spec.task_name);
    out << YAML::Key << "system_prompt" << YAML::Value;
    str(spec.system_prompt);
    out << YAML::Key << "entity_key_columns" << YAML::Value << YAML::BeginSeq;
    for (const auto& c : spec.entity_key_columns) str(c);
    out << YAML::EndSeq;

    out << YAML::Key << "attributes" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : spec.attributes) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value;
        str(a.name);
        out << YAML::Key << "question_template" << YAML::Value;
        str(a.question_template);
        out << YAML::Key << "value_kind" << YAML::Value << std::string(to_string(a.value_kind));
        if (a.value_kind == ValueKind::Enum) {
            out << YAML::Key << "enum_choices" << YAML::Value << YAML::BeginSeq;
            for (const auto& c : a.enum_choices) str(c);
            out << YAML::EndSeq;
        }
        out << YAML::Key << "allow_not_found" << YAML::Value << (a.allow_not_found ? "true" : "false");
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value;
    str(spec.model_id);
    out << YAML::Key << "api" << YAML::Value << spec.api;
    out << YAML::Key << "search" << YAML::Value << (spec.search_enabled ? "true" : "false");
    out << YAML::Key << "evidence_urls" << YAML::Value << (spec.request_evidence_urls ? "true" : "false");
    out << YAML::Key << "max_output_tokens" << YAML::Value << spec.max_output_tokens;
    out << YAML::EndMap;

    out << YAML::Key << "execution" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "max_parallel" << YAML::Value << spec.max_parallel;
    out << YAML::Key << "requests_per_minute" << YAML::Value << spec.requests_per_minute;
    out << YAML::Key << "max_attempts" << YAML::Value << spec.max_attempts;
    out << YAML::EndMap;

    out << YAML::Key << "pricing" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "input_per_million_tokens" << YAML::Value << spec.pricing.input_per_million_tokens.to_decimal();
    out << YAML::Key << "output_per_million_tokens" << YAML::Value << spec.pricing.output_per_million_tokens.to_decimal();
    out << YAML::Key << "per_search_call" << YAML::Value << spec.pricing.per_search_call.to_decimal();
    out << YAML::EndMap;
    out << YAML::EndMap;

    std::string text = out.c_str();
    text.push_back('\n');
    return text;
}

const std::string& EntityRecord::at(std::string_view column) const {
    auto it = fields.find(column);
    if (it == fields.end()) {
        throw ConfigError(Kind::MissingColumn, std::string(column), "entity has no column '" + std::string(column) + "'");
    }
    return it->second;
}

const EntityRecord* EntitySet::find(std::string_view entity_id) const {
    for (const auto& r : rows) {
        if (r.entity_id == entity_id) return &r;
    }
    return nullptr;
}

std::string make_entity_id(const std::vector<std::string>& key_values) {
    std::string id;
    for (std::size_t i = 0; i < key_values.size(); ++i) {
        if (i) id.push_back('|');
        id += key_values[i];
    }
    return id;
}

EntitySet parse_entity_set(std::string_view csv_text, const TaskSpec& spec) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::parse(csv_text);
    } catch (const csv::ParseError& e) {
        fail(Kind::MalformedCsv, "", e.what());
    }
    if (rows.empty()) fail(Kind::MalformedCsv, "", "entity CSV has no header row");

    EntitySet set;
    set.columns = rows.front();
    {
        std::set<std::string> seen;
        for (const auto& c : set.columns) {
            if (!seen.insert(c).second) fail(Kind::MalformedCsv, c, "duplicate CSV column '" + c + "'");
        }
    }
    for (const auto& col : spec.required_columns()) {
        if (std::find(set.columns.begin(), set.columns.end(), col) == set.columns.end()) {
            fail(Kind::MissingColumn, col, "entity CSV lacks required column '" + col + "'");
        }
    }

    std::set<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row.front().empty() && set.columns.size() > 1) continue;
        if (row.size() != set.columns.size()) {
            fail(Kind::MalformedCsv, "",
                 "entity CSV record " + std::to_string(r) + " has " + std::to_string(row.size()) +
                     " fields, header has " + std::to_string(set.columns.size()));
        }
        EntityRecord rec;
        for (std::size_t c = 0; c < row.size(); ++c) rec.fields.emplace(set.columns[c], row[c]);
        std::vector<std::string> key;
        for (const auto& k : spec.entity_key_columns) key.push_back(rec.fields.at(k));
        rec.entity_id = make_entity_id(key);
        if (!ids.insert(rec.entity_id).second) {
            fail(Kind::DuplicateEntityId, rec.entity_id, "duplicate entity id '" + rec.entity_id + "'");
        }
        set.rows.push_back(std::move(rec));
    }
    if (set.rows.empty()) fail(Kind::EmptyEntitySet, "", "entity CSV has no data rows");
    return set;
}

std::string serialize_entity_set(const EntitySet& set) {
    std::string out = csv::format_row(set.columns);
    for (const auto& rec : set.rows) {
        csv::Row row;
        for (const auto& c : set.columns) row.push_back(rec.fields.at(c));
        out += csv::format_row(row);
    }
    return out;
}

PromptBundle render_prompt(const TaskSpec& spec, const EntityRecord& record) {
    PromptBundle bundle;
    bundle.system = substitute_placeholders(spec.system_prompt, record);

    std::ostringstream user;
    user << "Curate the attributes below for one entity.\n\nEntity:\n";
    for (const auto& k : spec.entity_key_columns) user << "- " << k << ": " << record.at(k) << "\n";
    user << "\nAttributes:\n";
    int n = 1;
    for (const auto& a : spec.attributes) {
        user << n++ << ". " << a.name << " (" << to_string(a.value_kind);
        if (a.value_kind == ValueKind::Enum) {
            user << ": ";
            for (std::size_t i = 0; i < a.enum_choices.size(); ++i) user << (i ? " | " : "") << a.enum_choices[i];
        }
        if (a.value_kind == ValueKind::Date) user << ", YYYY-MM-DD";
        if (!a.allow_not_found) user << ", required";
        user << ")\n   " << substitute_placeholders(a.question_template, record) << "\n";
    }
    user << "\nReply with one JSON object holding exactly one key per attribute. Each entry is an "
            "object with \"status\" set to \"found\" or \"not_found\"; include \"value\" only when "
            "status is \"found\".";
    if (spec.request_evidence_urls) {
        user << " Add \"evidence_urls\" listing the pages that support each found value.";
    }
    user << "\n";
    bundle.user = user.str();
    bundle.output_schema = build_output_schema(spec);
    return bundle;
}

}  // namespace curate
