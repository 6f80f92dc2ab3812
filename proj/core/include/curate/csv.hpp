#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "curate/error.hpp"

namespace curate::csv {

using Row = std::vector<std::string>;

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("csv line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Parses RFC 4180 text: comma-delimited, CRLF or LF record separators,
/// double-quoted fields with "" escapes. A trailing newline does not start
/// a new record. A UTF-8 byte-order mark before the header is skipped.
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a comma, quote, CR or LF, or has
/// leading/trailing spaces.
std::string escape_field(std::string_view field);

/// Writes one record terminated by "\n".
std::string format_row(const Row& row);

std::string format(const std::vector<Row>& rows);

}  // namespace curate::csv
