#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "curate/provider.hpp"

namespace curate {

/// One recorded exchange, stored as `<dir>/<request_key>.json`. A fixture
/// holds either a response or a scripted provider error.
struct Fixture {
    std::string key;
    nlohmann::json request;  // request_summary()
    std::optional<ProviderResponse> response;
    std::optional<ProviderErrorKind> error;
    std::optional<std::chrono::milliseconds> retry_after;

    nlohmann::json to_json() const;
    static Fixture from_json(const nlohmann::json& j);
};

void write_fixture(const std::filesystem::path& dir, const Fixture& fixture);

/// Serves recorded responses by request key. Loads the whole directory up
/// front and is read-only afterwards.
class ReplayProvider final : public Provider {
public:
    explicit ReplayProvider(std::filesystem::path dir);

    ProviderResponse send(const CurationRequest& request) override;
    std::string identity() const override;

    std::size_t size() const { return fixtures_.size(); }
    bool contains(const std::string& key) const { return fixtures_.contains(key); }

private:
    std::filesystem::path dir_;
    std::map<std::string, Fixture, std::less<>> fixtures_;
};

/// Forwards to another provider and records every successful exchange as a
/// fixture. Writes are serialized through one lock.
class RecordingProvider final : public Provider {
public:
    RecordingProvider(Provider& inner, std::filesystem::path dir);

    ProviderResponse send(const CurationRequest& request) override;
    std::string identity() const override;

    std::size_t recorded() const;

private:
    Provider& inner_;
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::size_t recorded_ = 0;
};

}  // namespace curate
