#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace mtprompt::text {

/// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD, one per byte.
std::vector<char32_t> decode_utf8(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(const std::vector<char32_t>& cps);

/// Python's str.isspace() for a single code point.
bool is_unicode_space(char32_t cp);

/// Splits on runs of Unicode whitespace, dropping empty fields (Python's str.split()).
std::vector<std::string> split_whitespace(std::string_view s);

/// Trims Unicode whitespace.
std::string_view trim(std::string_view s);
std::string_view rtrim(std::string_view s);

bool is_blank(std::string_view s);

/// Removes one trailing "\n" (and a "\r" before it).
std::string_view strip_newline(std::string_view s);

/// std::getline that also drops a trailing '\r'.
bool read_line(std::istream& in, std::string& line);

/// Splits on a single-character delimiter, keeping empty fields.
std::vector<std::string_view> split(std::string_view s, char delim);

/// Non-overlapping occurrences of `needle`.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace mtprompt::text
