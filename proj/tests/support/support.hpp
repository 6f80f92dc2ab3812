#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "curate/fs_util.hpp"
#include "curate/provider.hpp"

namespace curate::testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return CURATE_SOURCE_DIR; }
inline fs::path data_dir() { return source_dir() / "data"; }
inline fs::path fixtures_dir() { return source_dir() / "fixtures"; }

inline std::string data_file(const std::string& relative) { return read_text_file(data_dir() / relative); }

/// A fresh directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("curate-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }
    std::string str(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

/// Transport that refuses to talk to anything and counts the attempts.
class RefusingTransport final : public HttpTransport {
public:
    explicit RefusingTransport(std::atomic<int>& attempts) : attempts_(attempts) {}
    HttpReply post_json(const std::string&, const std::string&, const HttpHeaders&) override {
        ++attempts_;
        HttpReply r;
        r.failure = HttpReply::Failure::Connection;
        r.error = "network access is not allowed in tests";
        return r;
    }

private:
    std::atomic<int>& attempts_;
};

/// CLI environment in which any network use is counted (and fails).
inline cli::Environment guarded_environment(std::atomic<int>& network_attempts) {
    cli::Environment env;
    env.transport_factory = [&network_attempts](const std::string&) {
        ++network_attempts;
        return std::make_shared<RefusingTransport>(network_attempts);
    };
    env.getenv = [](const std::string&) { return std::string(); };
    env.cwd = source_dir().string();
    return env;
}

struct CliResult {
    int code = -1;
    std::string out;
    int network_attempts = 0;
};

inline CliResult run_cli(const std::vector<std::string>& args, const std::string& input = "") {
    std::atomic<int> attempts{0};
    std::istringstream in(input);
    std::ostringstream out;
    CliResult r;
    r.code = cli::run_cli(args, in, out, guarded_environment(attempts));
    r.out = out.str();
    r.network_attempts = attempts.load();
    return r;
}

/// Provider backed by a function; counts calls.
class FunctionProvider final : public Provider {
public:
    using Fn = std::function<ProviderResponse(const CurationRequest&)>;
    explicit FunctionProvider(Fn fn) : fn_(std::move(fn)) {}
    ProviderResponse send(const CurationRequest& request) override {
        ++calls_;
        return fn_(request);
    }
    std::string identity() const override { return "function"; }
    int calls() const { return calls_.load(); }

private:
    Fn fn_;
    std::atomic<int> calls_{0};
};

inline ProviderResponse reply(const CurationRequest& request, std::string text, Usage usage = {100, 20, 1}) {
    ProviderResponse r;
    r.raw_text = std::move(text);
    r.model_id = request.model_id;
    r.usage = usage;
    if (!request.search_enabled) r.usage.search_calls = 0;
    return r;
}

/// Sorted regular-file names and contents below a directory.
inline std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), dir).string(), read_text_file(e.path()));
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace curate::testing
