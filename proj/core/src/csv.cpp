#include "curate/csv.hpp"

namespace curate::csv {

std::vector<Row> parse(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool row_open = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_open = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    throw ParseError(line, "quote inside unquoted field");
                }
                in_quotes = true;
                field_was_quoted = true;
                row_open = true;
                break;
            case ',':
                end_field();
                row_open = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                [[fallthrough]];
            case '\n':
                end_row();
                ++line;
                break;
            default:
                if (field_was_quoted) throw ParseError(line, "text after closing quote");
                field.push_back(c);
                row_open = true;
        }
    }
    if (in_quotes) throw ParseError(line, "unterminated quoted field");
    if (row_open || !field.empty()) end_row();
    return rows;
}

std::string escape_field(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                              (!field.empty() && (field.front() == ' ' || field.back() == ' '));
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(',');
        out += escape_field(row[i]);
    }
    out.push_back('\n');
    return out;
}

std::string format(const std::vector<Row>& rows) {
    std::string out;
    for (const auto& row : rows) out += format_row(row);
    return out;
}

}  // namespace curate::csv
