#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lrmt::unicode {

/// True when `text` is well-formed UTF-8.
bool is_valid_utf8(std::string_view text);

/// Splits UTF-8 text into code points, each returned as its UTF-8 byte string.
/// Throws DataError on malformed input.
std::vector<std::string> code_points(std::string_view text);

/// Number of code points in well-formed UTF-8 text.
std::size_t length(std::string_view text);

}  // namespace lrmt::unicode
