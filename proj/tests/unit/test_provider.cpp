#include <doctest.h>

#include <random>
#include <set>

#include "curate/provider.hpp"
#include "curate/task_config.hpp"
#include "support.hpp"

using namespace curate;
using curate::testing::data_file;

namespace {

CurationRequest sample_request() {
    CurationRequest r;
    r.model_id = "gpt-5-mini";
    r.system = "system text";
    r.user = "user text";
    r.output_schema = SchemaDoc{{{"type", "object"}}};
    r.search_enabled = true;
    r.max_output_tokens = 1000;
    return r;
}

}  // namespace

TEST_SUITE("provider") {
    TEST_CASE("request keys are stable and field sensitive") {
        const auto base = sample_request();
        const auto key = request_key(base);
        CHECK(key.size() == 64);
        CHECK(request_key(sample_request()) == key);

        auto flip = base;
        flip.search_enabled = false;
        CHECK(request_key(flip) != key);
        auto spaced = base;
        spaced.user += " ";
        CHECK(request_key(spaced) != key);
        auto model = base;
        model.model_id = "gpt-5";
        CHECK(request_key(model) != key);
        auto tokens = base;
        tokens.max_output_tokens = 1001;
        CHECK(request_key(tokens) != key);
        auto schema = base;
        schema.output_schema.json["x"] = 1;
        CHECK(request_key(schema) != key);
        auto sys = base;
        sys.system = "system  text";
        CHECK(request_key(sys) != key);
    }

    TEST_CASE("single-byte edits always change the key") {
        std::mt19937_64 rng(9);
        std::set<std::string> keys;
        const auto base = sample_request();
        keys.insert(request_key(base));
        for (int i = 0; i < 200; ++i) {
            auto r = base;
            auto& field = (rng() % 2) ? r.user : r.system;
            field[rng() % field.size()] = static_cast<char>('A' + rng() % 26);
            if (r == base) continue;
            CHECK(request_key(r) != request_key(base));
        }
    }

    TEST_CASE("faculty schema has one status/value entry per attribute") {
        const auto spec = parse_task_spec(data_file("faculty/task.yaml"));
        const auto schema = build_output_schema(spec).json;
        CHECK(schema["required"] == nlohmann::json({"degree_institution", "degree_year", "first_hire_institution"}));
        CHECK(schema["properties"].size() == 3);
        CHECK(schema["additionalProperties"] == false);
        for (const auto& [name, entry] : schema["properties"].items()) {
            CAPTURE(name);
            CHECK(entry["properties"].contains("status"));
            CHECK(entry["properties"].contains("value"));
            CHECK_FALSE(entry["properties"].contains("evidence_urls"));
            CHECK(entry["properties"]["status"]["enum"] == nlohmann::json({"found", "not_found"}));
        }
        CHECK(schema["properties"]["degree_year"]["properties"]["value"]["minimum"] == 1000);
        CHECK(schema["properties"]["degree_year"]["properties"]["value"]["maximum"] == 2100);
    }

    TEST_CASE("boolean attribute gets a boolean value slot") {
        const auto spec = parse_task_spec(data_file("nobel/task.yaml"));
        const auto schema = build_output_schema(spec).json;
        CHECK(schema["properties"]["is_alive"]["properties"]["value"]["type"] == "boolean");
        CHECK(schema["properties"]["death_date"]["properties"]["value"]["format"] == "date");
    }

    TEST_CASE("allow_not_found=false admits only found") {
        auto spec = parse_task_spec(data_file("senator/task.yaml"));
        spec.attributes[1].allow_not_found = false;
        spec.request_evidence_urls = true;
        const auto schema = build_output_schema(spec).json;
        const auto& entry = schema["properties"]["entry_method"];
        CHECK(entry["properties"]["status"]["enum"] == nlohmann::json({"found"}));
        CHECK(entry["required"] == nlohmann::json({"status", "value"}));
        CHECK(entry["properties"]["value"]["enum"] == nlohmann::json({"appointed", "elected"}));
        CHECK(entry["properties"].contains("evidence_urls"));
        CHECK(schema["properties"]["first_entry_year"]["properties"]["status"]["enum"].size() == 2);
    }

    TEST_CASE("curation requests mirror the task") {
        auto spec = parse_task_spec(data_file("nobel/task.yaml"));
        const auto set = parse_entity_set(data_file("nobel/entities.csv"), spec);
        auto req = make_curation_request(spec, render_prompt(spec, set.rows[0]));
        CHECK(req.search_enabled);
        CHECK(req.model_id == "gpt-5-mini");
        CHECK(req.max_output_tokens == 2000);
        spec.search_enabled = false;
        CHECK_FALSE(make_curation_request(spec, render_prompt(spec, set.rows[0])).search_enabled);
    }

    TEST_CASE("usage arithmetic and JSON") {
        const Usage a{10, 20, 1}, b{1, 2, 3};
        CHECK(a + b == Usage{11, 22, 4});
        CHECK(usage_from_json(usage_to_json(a)) == a);
        CHECK_THROWS(usage_from_json(nlohmann::json{{"input_tokens", -1}, {"output_tokens", 0}, {"search_calls", 0}}));
    }

    TEST_CASE("error kind names round trip") {
        for (auto k : {ProviderErrorKind::RateLimited, ProviderErrorKind::TransientServer,
                       ProviderErrorKind::NetworkTimeout, ProviderErrorKind::AuthFailure,
                       ProviderErrorKind::MalformedProviderReply, ProviderErrorKind::Rejected,
                       ProviderErrorKind::FixtureMiss}) {
            CHECK(parse_provider_error_kind(to_string(k)) == k);
        }
        CHECK_FALSE(parse_provider_error_kind("bogus").has_value());
    }
}
