#include "curate/live_provider.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace curate {

namespace {

using Kind = ProviderErrorKind;

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::int64_t count_or_zero(const nlohmann::json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number_integer()) return 0;
    return obj.at(key).get<std::int64_t>();
}

[[noreturn]] void malformed(const std::string& what) {
    throw ProviderError(Kind::MalformedProviderReply, "", "malformed provider reply: " + what);
}

// OpenAI Responses API: POST /responses with a hosted web_search tool.
class ResponsesAdapter final : public VendorAdapter {
public:
    std::string name() const override { return "responses"; }
    std::string path() const override { return "/responses"; }

    nlohmann::json build_payload(const CurationRequest& r) const override {
        nlohmann::json p = {
            {"model", r.model_id},
            {"instructions", r.system},
            {"input", r.user},
            {"max_output_tokens", r.max_output_tokens},
        };
        if (r.search_enabled) p["tools"] = nlohmann::json::array({{{"type", "web_search"}}});
        if (!r.output_schema.is_free_text()) {
            p["text"] = {{"format",
                          {{"type", "json_schema"}, {"name", "curation"}, {"schema", r.output_schema.json}, {"strict", false}}}};
        }
        return p;
    }

    ProviderResponse parse_reply(const nlohmann::json& body, const CurationRequest& r) const override {
        if (!body.is_object() || !body.contains("output") || !body.at("output").is_array()) malformed("missing output array");
        ProviderResponse resp;
        resp.model_id = r.model_id;
        bool have_text = false;
        for (const auto& item : body.at("output")) {
            const auto type = item.value("type", "");
            if (type == "web_search_call") {
                ++resp.usage.search_calls;
            } else if (type == "message" && item.contains("content") && item.at("content").is_array()) {
                for (const auto& part : item.at("content")) {
                    if (part.value("type", "") == "output_text" && part.contains("text")) {
                        resp.raw_text += part.at("text").get<std::string>();
                        have_text = true;
                    }
                }
            }
        }
        if (!have_text) malformed("no output_text in reply");
        const auto usage = body.value("usage", nlohmann::json::object());
        resp.usage.input_tokens = count_or_zero(usage, "input_tokens");
        resp.usage.output_tokens = count_or_zero(usage, "output_tokens");
        return resp;
    }
};

// Chat Completions: POST /chat/completions with web_search_options; one
// search call per request that enables search.
class ChatAdapter final : public VendorAdapter {
public:
    std::string name() const override { return "chat"; }
    std::string path() const override { return "/chat/completions"; }

    nlohmann::json build_payload(const CurationRequest& r) const override {
        nlohmann::json p = {
            {"model", r.model_id},
            {"messages", nlohmann::json::array({{{"role", "system"}, {"content", r.system}},
                                                {{"role", "user"}, {"content", r.user}}})},
            {"max_completion_tokens", r.max_output_tokens},
        };
        if (r.search_enabled) p["web_search_options"] = nlohmann::json::object();
        if (!r.output_schema.is_free_text()) {
            p["response_format"] = {{"type", "json_schema"},
                                    {"json_schema", {{"name", "curation"}, {"schema", r.output_schema.json}}}};
        }
        return p;
    }

    ProviderResponse parse_reply(const nlohmann::json& body, const CurationRequest& r) const override {
        if (!body.is_object() || !body.contains("choices") || !body.at("choices").is_array() ||
            body.at("choices").empty()) {
            malformed("missing choices");
        }
        const auto& message = body.at("choices").at(0).value("message", nlohmann::json::object());
        if (!message.contains("content") || !message.at("content").is_string()) malformed("missing message content");
        ProviderResponse resp;
        resp.model_id = r.model_id;
        resp.raw_text = message.at("content").get<std::string>();
        const auto usage = body.value("usage", nlohmann::json::object());
        resp.usage.input_tokens = count_or_zero(usage, "prompt_tokens");
        resp.usage.output_tokens = count_or_zero(usage, "completion_tokens");
        resp.usage.search_calls = r.search_enabled ? 1 : 0;
        return resp;
    }
};

std::optional<std::chrono::milliseconds> parse_retry_after(const HttpReply& reply) {
    if (auto ms = reply.header("retry-after-ms"); !ms.empty()) {
        try {
            return std::chrono::milliseconds(std::stol(ms));
        } catch (const std::exception&) {
        }
    }
    if (auto s = reply.header("retry-after"); !s.empty()) {
        try {
            return std::chrono::milliseconds(static_cast<long>(std::stod(s) * 1000));
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

}  // namespace

std::string HttpReply::header(std::string_view name) const {
    for (const auto& [k, v] : headers) {
        if (iequals(k, name)) return v;
    }
    return {};
}

std::unique_ptr<VendorAdapter> make_vendor_adapter(std::string_view name) {
    if (name == "responses") return std::make_unique<ResponsesAdapter>();
    if (name == "chat") return std::make_unique<ChatAdapter>();
    throw std::invalid_argument("unknown vendor adapter '" + std::string(name) + "'");
}

LiveConfig LiveConfig::from_env(std::string api) {
    LiveConfig c;
    c.api = std::move(api);
    if (const char* key = std::getenv("DP_API_KEY")) c.api_key = key;
    if (const char* url = std::getenv("DP_API_BASE_URL"); url && *url) c.base_url = url;
    return c;
}

LiveProvider::LiveProvider(LiveConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), adapter_(make_vendor_adapter(config_.api)), transport_(std::move(transport)) {}

ProviderResponse LiveProvider::send(const CurationRequest& request) {
    if (config_.api_key.empty()) throw ProviderError(Kind::AuthFailure, "", "DP_API_KEY is not set");

    const nlohmann::json payload = adapter_->build_payload(request);
    const HttpHeaders headers = {{"Authorization", "Bearer " + config_.api_key}};
    const HttpReply reply = transport_->post_json(adapter_->path(), payload.dump(), headers);

    switch (reply.failure) {
        case HttpReply::Failure::Timeout:
            throw ProviderError(Kind::NetworkTimeout, "", "request timed out: " + reply.error);
        case HttpReply::Failure::Connection:
            throw ProviderError(Kind::NetworkTimeout, "", "connection failed: " + reply.error);
        case HttpReply::Failure::None:
            break;
    }
    const int s = reply.status;
    if (s == 429) throw ProviderError(Kind::RateLimited, "", "rate limited (HTTP 429)", parse_retry_after(reply));
    if (s == 401 || s == 403) throw ProviderError(Kind::AuthFailure, "", "authentication failed (HTTP " + std::to_string(s) + ")");
    if (s == 408 || s == 409 || s >= 500) {
        throw ProviderError(Kind::TransientServer, "", "server error (HTTP " + std::to_string(s) + ")", parse_retry_after(reply));
    }
    if (s < 200 || s >= 300) {
        throw ProviderError(Kind::Rejected, "", "request rejected (HTTP " + std::to_string(s) + "): " + reply.body.substr(0, 500));
    }

    nlohmann::json body;
    try {
        body = nlohmann::json::parse(reply.body);
    } catch (const nlohmann::json::exception& e) {
        malformed(std::string("body is not JSON: ") + e.what());
    }
    ProviderResponse resp;
    try {
        resp = adapter_->parse_reply(body, request);
    } catch (const nlohmann::json::exception& e) {
        malformed(e.what());
    }
    resp.wire_payload = payload;
    return resp;
}

std::string LiveProvider::identity() const { return "live:" + adapter_->name() + "@" + config_.base_url; }

}  // namespace curate
