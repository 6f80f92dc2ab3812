#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "curate/error.hpp"

namespace curate {

class IoError : public Error {
public:
    using Error::Error;
};

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, flushes it, then renames over the
/// target. Readers see either the old file or the complete new one.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Encodes an arbitrary identifier into a portable file stem. Bytes outside
/// [A-Za-z0-9_-] become %XX, so the mapping is injective and never yields
/// '.', '/' or an empty stem.
std::string encode_file_stem(std::string_view id);
std::string decode_file_stem(std::string_view stem);

}  // namespace curate
