#include "jubensha/agent/timeline.hpp"

#include <array>
#include <cctype>
#include <optional>

#include "jubensha/errors.hpp"
#include "jubensha/text.hpp"

namespace jubensha::agent {

namespace {

struct Match {
    std::size_t begin;
    std::size_t end;
    std::string canonical;
};

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_alpha(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }

char32_t lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

std::u32string normalise(std::string_view text) {
    std::u32string s = text::decode_utf8(text);
    for (char32_t& c : s) {
        if (c >= U'０' && c <= U'９') c = U'0' + (c - U'０');
        if (c == U'：') c = U':';
        if (c == U'’') c = U'\'';
    }
    return s;
}

std::string hhmm(int h, int m) {
    std::string out;
    out += static_cast<char>('0' + h / 10);
    out += static_cast<char>('0' + h % 10);
    out += ':';
    out += static_cast<char>('0' + m / 10);
    out += static_cast<char>('0' + m % 10);
    return out;
}

// Reads 1-2 digits at i that are not part of a longer number.
std::optional<std::pair<int, std::size_t>> read_hour(const std::u32string& s, std::size_t i) {
    if (i >= s.size() || !is_digit(s[i])) return std::nullopt;
    if (i > 0 && is_digit(s[i - 1])) return std::nullopt;
    std::size_t j = i;
    int v = 0;
    while (j < s.size() && is_digit(s[j]) && j - i < 3) v = v * 10 + static_cast<int>(s[j++] - U'0');
    if (j - i > 2) return std::nullopt;
    return std::make_pair(v, j);
}

bool starts_with_ci(const std::u32string& s, std::size_t i, std::u32string_view word) {
    if (i + word.size() > s.size()) return false;
    for (std::size_t k = 0; k < word.size(); ++k) {
        if (lower(s[i + k]) != word[k]) return false;
    }
    return true;
}

bool word_boundary_after(const std::u32string& s, std::size_t j) { return j >= s.size() || !is_alpha(s[j]); }

constexpr std::u32string_view kCnDigits = U"零一二两三四五六七八九十";
constexpr std::array<std::u32string_view, 12> kDayParts = {U"早上", U"上午", U"中午", U"下午", U"傍晚", U"晚上",
                                                          U"夜里", U"凌晨", U"深夜", U"半夜", U"清晨", U"早晨"};
constexpr std::array<std::u32string_view, 12> kEnNumbers = {U"one", U"two", U"three", U"four", U"five", U"six",
                                                            U"seven", U"eight", U"nine", U"ten", U"eleven",
                                                            U"twelve"};

bool is_cn_digit(char32_t c) { return kCnDigits.find(c) != std::u32string_view::npos; }

std::vector<Match> scan(const std::u32string& s) {
    std::vector<Match> out;
    std::size_t i = 0;
    while (i < s.size()) {
        // HH:MM
        if (auto h = read_hour(s, i)) {
            auto [hour, j] = *h;
            if (j + 2 < s.size() && s[j] == U':' && is_digit(s[j + 1]) && is_digit(s[j + 2]) &&
                (j + 3 >= s.size() || !is_digit(s[j + 3]))) {
                const int minute = static_cast<int>((s[j + 1] - U'0') * 10 + (s[j + 2] - U'0'));
                if (hour <= 24 && minute <= 59) {
                    std::size_t e = j + 3;
                    std::size_t k = e < s.size() && s[e] == U' ' ? e + 1 : e;
                    int h24 = hour;
                    for (std::u32string_view suffix : {U"a.m.", U"p.m.", U"am", U"pm"}) {
                        if (hour >= 1 && hour <= 12 && starts_with_ci(s, k, suffix) &&
                            word_boundary_after(s, k + suffix.size())) {
                            h24 = (hour % 12) + (lower(s[k]) == U'p' ? 12 : 0);
                            e = k + suffix.size();
                            break;
                        }
                    }
                    out.push_back({i, e, hhmm(h24, minute)});
                    i = e;
                    continue;
                }
            }
            // 6 pm, 6pm, 6 p.m.
            std::size_t k = j;
            if (k < s.size() && s[k] == U' ') ++k;
            for (std::u32string_view suffix : {U"a.m.", U"p.m.", U"am", U"pm"}) {
                if (hour >= 1 && hour <= 12 && starts_with_ci(s, k, suffix) &&
                    word_boundary_after(s, k + suffix.size())) {
                    const bool pm = lower(s[k]) == U'p';
                    const int h24 = (hour % 12) + (pm ? 12 : 0);
                    out.push_back({i, k + suffix.size(), hhmm(h24, 0)});
                    i = k + suffix.size();
                    goto next;
                }
            }
            // 7 o'clock
            if (hour >= 1 && hour <= 12 && starts_with_ci(s, k, U"o'clock")) {
                out.push_back({i, k + 7, hhmm(hour, 0)});
                i = k + 7;
                continue;
            }
            // 8点, 8点半, 18时
            if (j < s.size() && (s[j] == U'点' || s[j] == U'时') && hour <= 24) {
                std::size_t e = j + 1;
                int minute = 0;
                if (e < s.size() && s[e] == U'半') {
                    minute = 30;
                    ++e;
                } else if (auto m = read_hour(s, e); m && m->second < s.size() && s[m->second] == U'分') {
                    minute = m->first;
                    e = m->second + 1;
                }
                out.push_back({i, e, minute <= 59 ? hhmm(hour, minute) : hhmm(hour, 0)});
                i = e;
                continue;
            }
            i = j;
            continue;
        }
        // seven o'clock
        if (is_alpha(s[i]) && (i == 0 || !is_alpha(s[i - 1]))) {
            for (std::size_t n = 0; n < kEnNumbers.size(); ++n) {
                const auto w = kEnNumbers[n];
                if (starts_with_ci(s, i, w) && i + w.size() < s.size() && s[i + w.size()] == U' ' &&
                    starts_with_ci(s, i + w.size() + 1, U"o'clock")) {
                    const std::size_t e = i + w.size() + 8;
                    out.push_back({i, e, hhmm(static_cast<int>(n + 1), 0)});
                    i = e;
                    goto next;
                }
            }
            for (std::u32string_view w : {U"midnight", U"noon"}) {
                if (starts_with_ci(s, i, w) && word_boundary_after(s, i + w.size())) {
                    out.push_back({i, i + w.size(), w == U"noon" ? "12:00" : "00:00"});
                    i += w.size();
                    goto next;
                }
            }
            while (i < s.size() && is_alpha(s[i])) ++i;
            continue;
        }
        // 十点半, 晚上九点
        if (is_cn_digit(s[i]) && (i == 0 || !is_cn_digit(s[i - 1]))) {
            std::size_t j = i;
            while (j < s.size() && is_cn_digit(s[j]) && j - i < 3) ++j;
            if (j < s.size() && s[j] == U'点') {
                std::size_t e = j + 1;
                bool minute_marker = false;
                if (e < s.size() && (s[e] == U'半' || s[e] == U'整' || s[e] == U'钟')) {
                    minute_marker = true;
                    ++e;
                } else {
                    std::size_t m = e;
                    while (m < s.size() && (is_cn_digit(s[m]) || is_digit(s[m]))) ++m;
                    if (m > e && m < s.size() && s[m] == U'分') {
                        minute_marker = true;
                        e = m + 1;
                    }
                }
                bool day_part = false;
                for (auto w : kDayParts) {
                    if (i >= w.size() && std::u32string_view(s).substr(i - w.size(), w.size()) == w) day_part = true;
                }
                if (minute_marker || day_part) {
                    out.push_back({i, e, text::encode_utf8(std::u32string_view(s).substr(i, e - i))});
                    i = e;
                    continue;
                }
            }
            i = j;
            continue;
        }
        ++i;
    next:;
    }
    return out;
}

}  // namespace

bool has_time_reference(std::string_view text) { return !scan(normalise(text)).empty(); }

std::vector<std::string> time_references(std::string_view text) {
    std::vector<std::string> out;
    for (auto& m : scan(normalise(text))) out.push_back(std::move(m.canonical));
    return out;
}

TimelineFact make_fact(std::string fact_text) {
    TimelineFact f;
    f.has_time_reference = has_time_reference(fact_text);
    f.text = std::move(fact_text);
    return f;
}

std::vector<TimelineFact> make_facts(const std::vector<std::string>& lines) {
    std::vector<TimelineFact> out;
    for (const auto& l : lines) {
        std::string t = text::trim_copy(l);
        if (!t.empty()) out.push_back(make_fact(std::move(t)));
    }
    return out;
}

std::string to_string(LengthUnit unit) {
    switch (unit) {
        case LengthUnit::auto_detect: return "auto";
        case LengthUnit::words: return "words";
        case LengthUnit::characters: return "characters";
    }
    return "auto";
}

LengthUnit length_unit_from_string(std::string_view s) {
    if (s == "auto") return LengthUnit::auto_detect;
    if (s == "words") return LengthUnit::words;
    if (s == "characters") return LengthUnit::characters;
    throw PreconditionError("unknown length unit '" + std::string(s) + "'");
}

LengthUnit resolve_length_unit(std::string_view text, LengthUnit unit) {
    if (unit != LengthUnit::auto_detect) return unit;
    return text::is_cjk_dominant(text) ? LengthUnit::characters : LengthUnit::words;
}

std::size_t response_length(std::string_view text, LengthUnit unit) {
    if (resolve_length_unit(text, unit) == LengthUnit::words) return text::split_whitespace(text).size();
    std::size_t n = 0;
    for (char32_t c : text::decode_utf8(text)) n += text::is_space(c) ? 0 : 1;
    return n;
}

}  // namespace jubensha::agent
