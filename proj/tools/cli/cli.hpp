#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "curate/live_provider.hpp"

namespace curate::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kFailedEntities = 2,
    kProviderError = 3,
    kBootstrapExhausted = 4,
};

struct Environment {
    /// Builds the HTTP transport for live and record providers.
    std::function<std::shared_ptr<HttpTransport>(const std::string& base_url)> transport_factory;
    /// Environment lookup (DP_API_KEY, DP_API_BASE_URL).
    std::function<std::string(const std::string& name)> getenv;
    /// Working directory for relative defaults such as CONSTITUTION.md.
    std::string cwd = ".";
};

/// Process environment and the real HTTPS transport.
Environment system_environment();

/// Parses `args` (without the program name) and runs one subcommand.
/// Everything human-readable, errors included, goes to `out`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, const Environment& env);

}  // namespace curate::cli
