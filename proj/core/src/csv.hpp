#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace triagekit::csv {

/// Minimal RFC-4180 reader: comma-separated, optional double-quote quoting
/// with "" escapes, tolerates CRLF. Rows of differing width are returned
/// as-is; the caller decides what that means.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// Quote a cell only when it needs it (comma, quote, or newline inside).
std::string escape_cell(std::string_view cell);

std::string join_row(const std::vector<std::string>& cells);

}  // namespace triagekit::csv
