#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace jubensha::agent {

struct TimelineFact {
    std::string text;
    bool has_time_reference = false;

    bool operator==(const TimelineFact&) const = default;
};

// Recognises clock times such as 18:10, 6 pm, 7 o'clock, 8点, 十点半 and
// 晚上九点. Chinese numerals followed by 点 only count next to a time-of-day
// word or a minute marker, so 一点点 does not match.
bool has_time_reference(std::string_view text);

// Matched time expressions in order. Numeric forms are canonicalised to HH:MM.
std::vector<std::string> time_references(std::string_view text);

TimelineFact make_fact(std::string text);
std::vector<TimelineFact> make_facts(const std::vector<std::string>& lines);

enum class LengthUnit { auto_detect, words, characters };

std::string to_string(LengthUnit unit);
LengthUnit length_unit_from_string(std::string_view s);

// auto_detect picks characters for CJK-dominant text and words otherwise.
LengthUnit resolve_length_unit(std::string_view text, LengthUnit unit);

// Words are whitespace-separated tokens; characters are non-space code points.
std::size_t response_length(std::string_view text, LengthUnit unit);

}  // namespace jubensha::agent
