#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chanaudit::utf8 {

/// Decodes UTF-8 into code points. Malformed bytes decode to U+FFFD and the
/// decoder resynchronises on the next byte.
std::u32string decode(std::string_view text);

std::string encode(char32_t cp);
std::string encode(std::u32string_view cps);

bool is_whitespace(char32_t cp);

/// Number of code points in `text` that are not whitespace.
std::size_t count_non_whitespace(std::string_view text);

/// Lowercases ASCII letters only; other bytes pass through untouched.
std::string ascii_lower(std::string_view text);

/// Upper-case hex code points joined by spaces, e.g. "1F469 200D 1F4BB".
std::string to_hex_sequence(std::u32string_view cps);
std::u32string from_hex_sequence(std::string_view hex);

}  // namespace chanaudit::utf8
