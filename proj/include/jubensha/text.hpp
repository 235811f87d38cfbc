#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace jubensha::text {

// Lenient decoder: malformed bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

std::size_t code_point_count(std::string_view s);

bool is_cjk(char32_t cp);
bool is_space(char32_t cp);
bool is_cjk_punct(char32_t cp);

// More than half the non-whitespace code points are CJK.
bool is_cjk_dominant(std::string_view s);

std::string_view trim(std::string_view s);
std::string trim_copy(std::string_view s);
std::string rtrim_copy(std::string_view s);
std::string to_lower_ascii(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);
bool starts_with(std::string_view s, std::string_view prefix);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

// Sentence split on 。！？ always and on .!? when followed by whitespace or end.
std::vector<std::string> split_sentences(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercased ASCII words of length >= 3 minus a small stop list, plus CJK bigrams.
std::set<std::string> content_terms(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

}  // namespace jubensha::text
