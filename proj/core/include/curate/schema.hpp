#pragma once

#include <nlohmann/json.hpp>

namespace curate {

/// JSON-schema document describing the structured reply expected from the
/// model. A null document means "free text" (used by bootstrap drafts).
struct SchemaDoc {
    nlohmann::json json;

    bool is_free_text() const { return json.is_null(); }
    friend bool operator==(const SchemaDoc&, const SchemaDoc&) = default;
};

}  // namespace curate
