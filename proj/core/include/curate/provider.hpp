#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "curate/error.hpp"
#include "curate/schema.hpp"
#include "curate/task_config.hpp"

namespace curate {

struct CurationRequest {
    std::string model_id;
    std::string system;
    std::string user;
    SchemaDoc output_schema;
    bool search_enabled = true;
    int max_output_tokens = 0;

    friend bool operator==(const CurationRequest&, const CurationRequest&) = default;
};

struct Usage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t search_calls = 0;

    Usage& operator+=(const Usage& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        search_calls += o.search_calls;
        return *this;
    }
    friend Usage operator+(Usage a, const Usage& b) { return a += b; }
    friend bool operator==(const Usage&, const Usage&) = default;
};

nlohmann::json usage_to_json(const Usage& usage);
Usage usage_from_json(const nlohmann::json& j);

struct ProviderResponse {
    std::string raw_text;
    Usage usage;
    std::string model_id;
    /// Request body as sent on the wire; null for providers without one.
    nlohmann::json wire_payload;
};

enum class ProviderErrorKind {
    RateLimited,
    TransientServer,
    NetworkTimeout,
    AuthFailure,
    MalformedProviderReply,
    Rejected,     // non-retryable client error (4xx other than 401/403/408/409/429)
    FixtureMiss,  // replay store has no entry for the request key
};

std::string_view to_string(ProviderErrorKind kind);
std::optional<ProviderErrorKind> parse_provider_error_kind(std::string_view text);

class ProviderError : public KindedError<ProviderErrorKind> {
public:
    ProviderError(ProviderErrorKind kind, std::string subject, const std::string& message,
                  std::optional<std::chrono::milliseconds> retry_after = std::nullopt)
        : KindedError(kind, std::move(subject), message), retry_after_(retry_after) {}

    std::optional<std::chrono::milliseconds> retry_after() const noexcept { return retry_after_; }

private:
    std::optional<std::chrono::milliseconds> retry_after_;
};

/// A model call with an optional hosted web-search tool and structured
/// output. Implementations must be safe to call from many threads.
class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderResponse send(const CurationRequest& request) = 0;
    /// Short description recorded in the run manifest.
    virtual std::string identity() const = 0;
};

/// SHA-256 over the request's fields, byte for byte. Equal requests give
/// equal keys; any differing byte gives a different key.
std::string request_key(const CurationRequest& request);

/// Human-readable request fields stored beside recorded fixtures.
nlohmann::json request_summary(const CurationRequest& request);

/// JSON schema of the per-entity reply: one object per attribute with
/// `status` and a typed `value`.
SchemaDoc build_output_schema(const TaskSpec& spec);

CurationRequest make_curation_request(const TaskSpec& spec, const PromptBundle& prompt);

}  // namespace curate
