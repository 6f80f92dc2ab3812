#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "curate/provider.hpp"

namespace curate {

struct HttpReply {
    enum class Failure { None, Timeout, Connection };

    int status = 0;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
    Failure failure = Failure::None;
    std::string error;

    /// Case-insensitive header lookup; empty when absent.
    std::string header(std::string_view name) const;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// One HTTP exchange. Implementations must be thread-safe.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpReply post_json(const std::string& path, const std::string& body, const HttpHeaders& headers) = 0;
};

/// HTTPS/HTTP transport for `base_url` (e.g. "https://api.openai.com/v1");
/// request paths are appended to the URL's path.
std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout = std::chrono::seconds(300));

/// Maps the generic request onto one vendor's wire format.
class VendorAdapter {
public:
    virtual ~VendorAdapter() = default;
    virtual std::string name() const = 0;
    virtual std::string path() const = 0;
    virtual nlohmann::json build_payload(const CurationRequest& request) const = 0;
    /// Throws ProviderError(MalformedProviderReply) when the body lacks the
    /// expected fields.
    virtual ProviderResponse parse_reply(const nlohmann::json& body, const CurationRequest& request) const = 0;
};

/// "responses" (hosted web_search tool, json_schema text format) or
/// "chat" (chat completions, web_search_options). Throws std::invalid_argument.
std::unique_ptr<VendorAdapter> make_vendor_adapter(std::string_view name);

struct LiveConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string api = "responses";

    /// Reads DP_API_KEY and DP_API_BASE_URL.
    static LiveConfig from_env(std::string api);
};

class LiveProvider final : public Provider {
public:
    LiveProvider(LiveConfig config, std::shared_ptr<HttpTransport> transport);

    ProviderResponse send(const CurationRequest& request) override;
    std::string identity() const override;

private:
    LiveConfig config_;
    std::unique_ptr<VendorAdapter> adapter_;
    std::shared_ptr<HttpTransport> transport_;
};

}  // namespace curate
