#include <httplib.h>

#include <mutex>
#include <stdexcept>

#include "curate/live_provider.hpp"

namespace curate {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) : timeout_(timeout) {
        const auto scheme_end = base_url.find("://");
        if (scheme_end == std::string::npos) throw std::invalid_argument("base URL lacks a scheme: " + base_url);
        const auto path_start = base_url.find('/', scheme_end + 3);
        origin_ = base_url.substr(0, path_start);
        if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }

    HttpReply post_json(const std::string& path, const std::string& body, const HttpHeaders& headers) override {
        // httplib::Client is not safe for concurrent use; one per call.
        httplib::Client client(origin_);
        client.set_connection_timeout(std::chrono::seconds(30));
        client.set_read_timeout(timeout_);
        client.set_write_timeout(std::chrono::seconds(60));
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);

        HttpReply reply;
        auto res = client.Post(prefix_ + path, h, body, "application/json");
        if (!res) {
            const auto err = res.error();
            reply.failure = (err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout)
                                ? HttpReply::Failure::Timeout
                                : HttpReply::Failure::Connection;
            reply.error = httplib::to_string(err);
            return reply;
        }
        reply.status = res->status;
        reply.body = res->body;
        for (const auto& [k, v] : res->headers) reply.headers.emplace_back(k, v);
        return reply;
    }

private:
    std::string origin_;
    std::string prefix_;
    std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout) {
    return std::make_shared<HttplibTransport>(base_url, timeout);
}

}  // namespace curate
