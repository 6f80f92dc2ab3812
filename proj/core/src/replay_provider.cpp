#include "curate/replay_provider.hpp"

#include "curate/fs_util.hpp"

namespace curate {

namespace fs = std::filesystem;

nlohmann::json Fixture::to_json() const {
    nlohmann::json j = {{"key", key}, {"request", request}};
    if (response) {
        j["response"] = {
            {"raw_text", response->raw_text},
            {"model_id", response->model_id},
            {"usage", usage_to_json(response->usage)},
        };
        if (!response->wire_payload.is_null()) j["payload"] = response->wire_payload;
    }
    if (error) {
        j["error"] = {{"kind", std::string(to_string(*error))}};
        if (retry_after) j["error"]["retry_after_ms"] = retry_after->count();
    }
    return j;
}

Fixture Fixture::from_json(const nlohmann::json& j) {
    Fixture f;
    f.key = j.at("key").get<std::string>();
    f.request = j.value("request", nlohmann::json::object());
    if (j.contains("response")) {
        const auto& r = j.at("response");
        ProviderResponse resp;
        resp.raw_text = r.at("raw_text").get<std::string>();
        resp.model_id = r.at("model_id").get<std::string>();
        resp.usage = usage_from_json(r.at("usage"));
        if (j.contains("payload")) resp.wire_payload = j.at("payload");
        f.response = std::move(resp);
    }
    if (j.contains("error")) {
        const auto& e = j.at("error");
        const auto kind_text = e.at("kind").get<std::string>();
        f.error = parse_provider_error_kind(kind_text);
        if (!f.error) throw std::invalid_argument("unknown error kind '" + kind_text + "'");
        if (e.contains("retry_after_ms")) f.retry_after = std::chrono::milliseconds(e.at("retry_after_ms").get<long>());
    }
    if (f.response.has_value() == f.error.has_value()) {
        throw std::invalid_argument("fixture must hold exactly one of response/error");
    }
    return f;
}

void write_fixture(const fs::path& dir, const Fixture& fixture) {
    write_file_atomic(dir / (fixture.key + ".json"), fixture.to_json().dump(2) + "\n");
}

ReplayProvider::ReplayProvider(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::is_directory(dir_)) throw IoError("fixture directory not found: " + dir_.string());
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        Fixture f;
        try {
            f = Fixture::from_json(nlohmann::json::parse(read_text_file(entry.path())));
        } catch (const std::exception& e) {
            throw IoError("bad fixture " + entry.path().string() + ": " + e.what());
        }
        if (f.key != entry.path().stem().string()) {
            throw IoError("fixture " + entry.path().string() + " holds key " + f.key);
        }
        fixtures_.emplace(f.key, std::move(f));
    }
}

ProviderResponse ReplayProvider::send(const CurationRequest& request) {
    const auto key = request_key(request);
    auto it = fixtures_.find(key);
    if (it == fixtures_.end()) {
        throw ProviderError(ProviderErrorKind::FixtureMiss, key, "no fixture for request key " + key);
    }
    const Fixture& f = it->second;
    if (f.error) throw ProviderError(*f.error, key, "recorded provider error for " + key, f.retry_after);
    ProviderResponse resp = *f.response;
    if (resp.model_id != request.model_id) {
        throw ProviderError(ProviderErrorKind::MalformedProviderReply, key,
                            "fixture " + key + " was recorded for model " + resp.model_id);
    }
    return resp;
}

std::string ReplayProvider::identity() const { return "replay:" + dir_.string(); }

RecordingProvider::RecordingProvider(Provider& inner, fs::path dir) : inner_(inner), dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

ProviderResponse RecordingProvider::send(const CurationRequest& request) {
    ProviderResponse resp = inner_.send(request);
    Fixture f;
    f.key = request_key(request);
    f.request = request_summary(request);
    f.response = resp;
    std::lock_guard lock(mutex_);
    write_fixture(dir_, f);
    ++recorded_;
    return resp;
}

std::string RecordingProvider::identity() const { return "record:" + inner_.identity() + "->" + dir_.string(); }

std::size_t RecordingProvider::recorded() const {
    std::lock_guard lock(mutex_);
    return recorded_;
}

}  // namespace curate
