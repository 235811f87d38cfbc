#include "jubensha/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace jubensha::text {

std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        int len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        if (i + len > n) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                              (len == 4 && cp < 0x10000);
        if (!ok || overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) append_utf8(out, cp);
    return out;
}

std::size_t code_point_count(std::string_view s) { return decode_utf8(s).size(); }

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
           (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0xAC00 && cp <= 0xD7AF);
}

bool is_cjk_punct(char32_t cp) {
    return (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF) ||
           (cp >= 0x2018 && cp <= 0x201F);
}

bool is_space(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
           cp == 0x00A0 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0xFEFF;
}

bool is_cjk_dominant(std::string_view s) {
    std::size_t cjk = 0;
    std::size_t other = 0;
    for (char32_t cp : decode_utf8(s)) {
        if (is_space(cp)) continue;
        if (is_cjk(cp)) {
            ++cjk;
        } else {
            ++other;
        }
    }
    return cjk > other;
}

namespace {

// Length in bytes of a whitespace code point at the start of s, or 0.
std::size_t leading_space_len(std::string_view s) {
    if (s.empty()) return 0;
    const auto c = static_cast<unsigned char>(s[0]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return 1;
    if (s.size() >= 2 && c == 0xC2 && static_cast<unsigned char>(s[1]) == 0xA0) return 2;
    if (s.size() >= 3 && c == 0xE3 && static_cast<unsigned char>(s[1]) == 0x80 &&
        static_cast<unsigned char>(s[2]) == 0x80)
        return 3;
    if (s.size() >= 3 && c == 0xEF && static_cast<unsigned char>(s[1]) == 0xBB &&
        static_cast<unsigned char>(s[2]) == 0xBF)
        return 3;
    return 0;
}

std::size_t trailing_space_len(std::string_view s) {
    if (s.empty()) return 0;
    const auto c = static_cast<unsigned char>(s.back());
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return 1;
    if (s.size() >= 2 && static_cast<unsigned char>(s[s.size() - 2]) == 0xC2 && c == 0xA0) return 2;
    if (s.size() >= 3 && static_cast<unsigned char>(s[s.size() - 3]) == 0xE3 &&
        static_cast<unsigned char>(s[s.size() - 2]) == 0x80 && c == 0x80)
        return 3;
    return 0;
}

}  // namespace

std::string_view trim(std::string_view s) {
    while (std::size_t n = leading_space_len(s)) s.remove_prefix(n);
    while (std::size_t n = trailing_space_len(s)) s.remove_suffix(n);
    return s;
}

std::string trim_copy(std::string_view s) { return std::string(trim(s)); }

std::string rtrim_copy(std::string_view s) {
    while (std::size_t n = trailing_space_len(s)) s.remove_suffix(n);
    return std::string(s);
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find('\n', start);
        if (end == std::string_view::npos) end = s.size();
        std::string_view line = s.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.emplace_back(line);
        start = end + 1;
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char32_t cp : decode_utf8(s)) {
        if (is_space(cp)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            append_utf8(cur, cp);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
    const std::u32string cps = decode_utf8(s);
    std::vector<std::string> out;
    std::u32string cur;
    auto flush = [&] {
        std::string t = trim_copy(encode_utf8(cur));
        if (!t.empty()) out.push_back(std::move(t));
        cur.clear();
    };
    auto is_closer = [](char32_t c) {
        return c == U'"' || c == U'\'' || c == U'”' || c == U'’' || c == U'」' ||
               c == U'』' || c == U')' || c == U'）';
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (c == U'\n') {
            flush();
            continue;
        }
        cur.push_back(c);
        bool end = false;
        if (c == U'。' || c == U'！' || c == U'？') {
            end = true;
        } else if (c == U'.' || c == U'!' || c == U'?') {
            end = i + 1 == cps.size() || is_space(cps[i + 1]) || is_closer(cps[i + 1]);
        }
        if (end) {
            while (i + 1 < cps.size() && is_closer(cps[i + 1])) cur.push_back(cps[++i]);
            flush();
        }
    }
    flush();
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::set<std::string> content_terms(std::string_view s) {
    static const std::set<std::string> stop = {
        "the",  "and",  "you",  "your", "was",  "were", "with", "for",  "that", "this",
        "then", "from", "into", "have", "had",  "his",  "her",  "she",  "him",  "they",
        "them", "are",  "did",  "not",  "but",  "what", "when", "who",  "said", "mine",
        "our",  "its",  "there", "their", "about", "been", "also", "yours", "myself",
        "yourself", "over", "after", "before", "some", "all", "any", "very", "just"};
    static const std::u32string breakers = U"你我他她它的了是在和也就都";
    std::set<std::string> out;
    const std::u32string cps = decode_utf8(s);
    std::string word;
    auto flush_word = [&] {
        while (!word.empty() && word.back() == ':') word.pop_back();
        while (!word.empty() && word.front() == ':') word.erase(word.begin());
        const bool has_digit = std::any_of(word.begin(), word.end(),
                                           [](char c) { return c >= '0' && c <= '9'; });
        if ((word.size() >= 3 || has_digit) && !stop.count(word)) out.insert(word);
        word.clear();
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (c < 0x80 && (std::isalnum(static_cast<int>(c)) || c == ':')) {
            word.push_back(static_cast<char>(std::tolower(static_cast<int>(c))));
            continue;
        }
        if (c == U'：' && !word.empty()) {
            word.push_back(':');
            continue;
        }
        if (!word.empty()) flush_word();
        if (is_cjk(c) && breakers.find(c) == std::u32string::npos && i + 1 < cps.size() &&
            is_cjk(cps[i + 1]) && breakers.find(cps[i + 1]) == std::u32string::npos) {
            std::string bigram;
            append_utf8(bigram, c);
            append_utf8(bigram, cps[i + 1]);
            out.insert(std::move(bigram));
        }
    }
    if (!word.empty()) flush_word();
    return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

}  // namespace jubensha::text
