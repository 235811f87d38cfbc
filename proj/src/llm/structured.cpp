#include "jubensha/llm/structured.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include <spdlog/spdlog.h>

#include "jubensha/text.hpp"

namespace jubensha::llm {

using nlohmann::ordered_json;

namespace {

constexpr int kMaxDepth = 64;
constexpr std::size_t kMaxCandidates = 256;

// UTF-8 sequences treated specially by the parser.
constexpr std::string_view kFullColon = "\xEF\xBC\x9A";   // ：
constexpr std::string_view kFullComma = "\xEF\xBC\x8C";   // ，
constexpr std::string_view kIdeoComma = "\xE3\x80\x81";   // 、
constexpr std::string_view kLeftDq = "\xE2\x80\x9C";      // “
constexpr std::string_view kRightDq = "\xE2\x80\x9D";     // ”
constexpr std::string_view kLeftSq = "\xE2\x80\x98";      // ‘
constexpr std::string_view kRightSq = "\xE2\x80\x99";     // ’
constexpr std::string_view kEllipsis = "\xE2\x80\xA6";    // …

class LenientParser {
public:
    LenientParser(std::string_view s, bool heuristic_quotes) : s_(s), heuristic_(heuristic_quotes) {}

    ordered_json parse_value() {
        skip_ws();
        if (eof()) fail("unexpected end of input");
        const char c = s_[i_];
        if (c == '{') return parse_object();
        if (c == '[') return parse_array();
        if (c == '"' || c == '\'') return ordered_json(parse_string());
        if (at(kLeftDq) || at(kLeftSq)) return ordered_json(parse_string());
        if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) return parse_number();
        return parse_bare_literal();
    }

    std::size_t position() const { return i_; }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError(why + " at offset " + std::to_string(i_));
    }

    bool eof() const { return i_ >= s_.size(); }
    bool at(std::string_view tok) const { return s_.substr(i_, tok.size()) == tok; }

    void skip_ws() {
        while (!eof()) {
            const char c = s_[i_];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
                ++i_;
            } else if (at("\xE3\x80\x80") || at("\xEF\xBB\xBF")) {
                i_ += 3;
            } else if (at("\xC2\xA0")) {
                i_ += 2;
            } else {
                break;
            }
        }
    }

    // "...", "......" and "…" stand in for elided entries in example outputs.
    bool skip_ellipsis() {
        bool any = false;
        for (;;) {
            skip_ws();
            if (at("...")) {
                while (!eof() && s_[i_] == '.') ++i_;
                any = true;
            } else if (at(kEllipsis)) {
                while (at(kEllipsis)) i_ += kEllipsis.size();
                any = true;
            } else {
                return any;
            }
        }
    }

    bool consume_separator() {
        skip_ws();
        if (!eof() && s_[i_] == ',') {
            ++i_;
            return true;
        }
        if (at(kFullComma)) {
            i_ += kFullComma.size();
            return true;
        }
        return false;
    }

    bool consume_colon() {
        skip_ws();
        if (!eof() && s_[i_] == ':') {
            ++i_;
            return true;
        }
        if (at(kFullColon)) {
            i_ += kFullColon.size();
            return true;
        }
        return false;
    }

    ordered_json parse_object() {
        if (++depth_ > kMaxDepth) fail("nesting too deep");
        ++i_;  // {
        ordered_json obj = ordered_json::object();
        for (;;) {
            skip_ellipsis();
            skip_ws();
            if (eof()) fail("unterminated object");
            if (s_[i_] == '}') {
                ++i_;
                break;
            }
            if (consume_separator()) continue;
            std::string key = parse_key();
            if (!consume_colon()) fail("expected ':' after key");
            ordered_json value = parse_value();
            obj[text::trim_copy(key)] = std::move(value);
            if (consume_separator()) continue;
            skip_ellipsis();
            skip_ws();
            if (!eof() && s_[i_] == '}') {
                ++i_;
                break;
            }
            fail("expected ',' or '}'");
        }
        --depth_;
        return obj;
    }

    ordered_json parse_array() {
        if (++depth_ > kMaxDepth) fail("nesting too deep");
        ++i_;  // [
        ordered_json arr = ordered_json::array();
        for (;;) {
            skip_ellipsis();
            skip_ws();
            if (eof()) fail("unterminated list");
            if (s_[i_] == ']') {
                ++i_;
                break;
            }
            if (consume_separator()) continue;
            arr.push_back(parse_value());
            if (consume_separator()) continue;
            skip_ellipsis();
            skip_ws();
            if (!eof() && s_[i_] == ']') {
                ++i_;
                break;
            }
            fail("expected ',' or ']'");
        }
        --depth_;
        return arr;
    }

    std::string parse_key() {
        skip_ws();
        if (eof()) fail("expected key");
        const char c = s_[i_];
        if (c == '"' || c == '\'' || at(kLeftDq) || at(kLeftSq)) return parse_string();
        // Bare key: everything up to the colon on the same line.
        const std::size_t start = i_;
        while (!eof()) {
            if (s_[i_] == ':' || at(kFullColon)) break;
            if (s_[i_] == '\n' || s_[i_] == '{' || s_[i_] == '}' || s_[i_] == '[' || s_[i_] == ']' ||
                s_[i_] == ',') {
                fail("malformed bare key");
            }
            ++i_;
        }
        if (eof()) fail("unterminated bare key");
        std::string key = text::trim_copy(s_.substr(start, i_ - start));
        if (key.empty()) fail("empty bare key");
        return key;
    }

    // A closing quote only ends the string when what follows looks like structure.
    bool closes_here(std::size_t after) const {
        std::size_t j = after;
        while (j < s_.size() && (s_[j] == ' ' || s_[j] == '\t' || s_[j] == '\r' || s_[j] == '\n')) ++j;
        if (j >= s_.size()) return true;
        const char c = s_[j];
        if (c == ',' || c == ':' || c == '}' || c == ']') return true;
        const std::string_view rest = s_.substr(j);
        return rest.substr(0, kFullComma.size()) == kFullComma ||
               rest.substr(0, kFullColon.size()) == kFullColon || rest.substr(0, 3) == "..." ||
               rest.substr(0, kEllipsis.size()) == kEllipsis;
    }

    std::string parse_string() {
        std::string_view close;
        char ascii_quote = 0;
        if (at(kLeftDq)) {
            i_ += kLeftDq.size();
            close = kRightDq;
        } else if (at(kLeftSq)) {
            i_ += kLeftSq.size();
            close = kRightSq;
        } else {
            ascii_quote = s_[i_++];
        }
        std::string out;
        while (!eof()) {
            const char c = s_[i_];
            if (c == '\\' && i_ + 1 < s_.size()) {
                const char e = s_[i_ + 1];
                i_ += 2;
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case 'b': out.push_back('\b'); break;
                    case 'f': out.push_back('\f'); break;
                    case '/': out.push_back('/'); break;
                    case 'u': out.append(parse_unicode_escape()); break;
                    default: out.push_back(e); break;
                }
                continue;
            }
            if (ascii_quote ? c == ascii_quote : at(close)) {
                const std::size_t len = ascii_quote ? 1 : close.size();
                if (!heuristic_ || closes_here(i_ + len)) {
                    i_ += len;
                    return out;
                }
            }
            out.push_back(c);
            ++i_;
        }
        fail("unterminated string");
    }

    std::string parse_unicode_escape() {
        auto hex4 = [&]() -> unsigned {
            if (i_ + 4 > s_.size()) fail("short \\u escape");
            unsigned v = 0;
            for (int k = 0; k < 4; ++k) {
                const char h = s_[i_++];
                v <<= 4;
                if (h >= '0' && h <= '9') v |= static_cast<unsigned>(h - '0');
                else if (h >= 'a' && h <= 'f') v |= static_cast<unsigned>(h - 'a' + 10);
                else if (h >= 'A' && h <= 'F') v |= static_cast<unsigned>(h - 'A' + 10);
                else fail("bad \\u escape");
            }
            return v;
        };
        char32_t cp = hex4();
        if (cp >= 0xD800 && cp <= 0xDBFF && at("\\u")) {
            i_ += 2;
            const unsigned lo = hex4();
            if (lo >= 0xDC00 && lo <= 0xDFFF) {
                cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
            } else {
                cp = 0xFFFD;
            }
        } else if (cp >= 0xD800 && cp <= 0xDFFF) {
            cp = 0xFFFD;
        }
        std::string out;
        text::append_utf8(out, cp);
        return out;
    }

    ordered_json parse_number() {
        const std::size_t start = i_;
        if (s_[i_] == '-' || s_[i_] == '+') ++i_;
        bool is_float = false;
        while (!eof()) {
            const char c = s_[i_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                ++i_;
            } else if (c == '.' || c == 'e' || c == 'E' ||
                       ((c == '-' || c == '+') && (s_[i_ - 1] == 'e' || s_[i_ - 1] == 'E'))) {
                // "..." after a number is an ellipsis, not a fraction.
                if (c == '.' && at("..")) break;
                is_float = true;
                ++i_;
            } else {
                break;
            }
        }
        const std::string tok(s_.substr(start, i_ - start));
        if (tok == "-" || tok == "+") fail("bad number");
        char* end = nullptr;
        if (!is_float) {
            errno = 0;
            const long long v = std::strtoll(tok.c_str(), &end, 10);
            if (errno == 0 && end && *end == '\0') return ordered_json(v);
        }
        const double d = std::strtod(tok.c_str(), &end);
        if (!end || *end != '\0') fail("bad number");
        return ordered_json(d);
    }

    ordered_json parse_bare_literal() {
        const std::size_t start = i_;
        while (!eof() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
        const std::string word(s_.substr(start, i_ - start));
        if (word == "true" || word == "True" || word == "TRUE") return ordered_json(true);
        if (word == "false" || word == "False" || word == "FALSE") return ordered_json(false);
        if (word == "null" || word == "None" || word == "NULL" || word == "none") return ordered_json(nullptr);
        i_ = start;
        fail("unexpected token");
    }

    std::string_view s_;
    bool heuristic_;
    std::size_t i_ = 0;
    int depth_ = 0;
};

ordered_json parse_at(std::string_view text, bool heuristic) {
    LenientParser p(text, heuristic);
    return p.parse_value();
}

// Tries heuristic quoting first, then strict.
std::optional<ordered_json> try_parse(std::string_view text) {
    for (bool heuristic : {true, false}) {
        try {
            return parse_at(text, heuristic);
        } catch (const ParseError&) {
        }
    }
    return std::nullopt;
}

std::optional<ordered_json> find_container(std::string_view region, char opener) {
    std::size_t pos = 0;
    std::size_t tried = 0;
    while ((pos = region.find(opener, pos)) != std::string_view::npos && tried < kMaxCandidates) {
        ++tried;
        if (auto v = try_parse(region.substr(pos))) {
            if ((opener == '{' && v->is_object()) || (opener == '[' && v->is_array())) return v;
        }
        ++pos;
    }
    return std::nullopt;
}

std::vector<std::string_view> fenced_regions(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (out.size() < 16) {
        const std::size_t open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t body = text.find('\n', open + 3);
        if (body == std::string_view::npos) break;
        ++body;
        const std::size_t close = text.find("```", body);
        if (close == std::string_view::npos) {
            out.push_back(text.substr(body));
            break;
        }
        out.push_back(text.substr(body, close - body));
        pos = close + 3;
    }
    return out;
}

std::optional<ordered_json> locate(std::string_view response, char opener) {
    for (std::string_view region : fenced_regions(response)) {
        if (auto v = find_container(region, opener)) return v;
    }
    return find_container(response, opener);
}

std::string strip_list_marker(std::string_view line) {
    std::string_view s = text::trim(line);
    for (std::string_view bullet : {"- ", "* ", "\xE2\x80\xA2 ", "\xC2\xB7 "}) {
        if (text::starts_with(s, bullet)) {
            s.remove_prefix(bullet.size());
            return text::trim_copy(s);
        }
    }
    std::size_t d = 0;
    while (d < s.size() && d < 3 && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
    if (d > 0 && d < s.size()) {
        std::string_view rest = s.substr(d);
        for (std::string_view marker : {". ", ") ", ".", ")", "\xE3\x80\x81", "\xEF\xBC\x8E"}) {
            if (text::starts_with(rest, marker)) {
                // "18:10" or "1.5" stays intact: marker must not be followed by a digit.
                std::string_view after = rest.substr(marker.size());
                if (!after.empty() && std::isdigit(static_cast<unsigned char>(after[0]))) break;
                return text::trim_copy(after);
            }
        }
    }
    return std::string(s);
}

std::string strip_wrapping_quotes(std::string s) {
    auto strip = [&](std::string_view open, std::string_view close) {
        if (s.size() >= open.size() + close.size() && text::starts_with(s, open) &&
            s.compare(s.size() - close.size(), close.size(), close) == 0) {
            s = text::trim_copy(std::string_view(s).substr(open.size(), s.size() - open.size() - close.size()));
            return true;
        }
        return false;
    };
    strip("\"", "\"") || strip("'", "'") || strip(kLeftDq, kRightDq);
    return s;
}

}  // namespace

std::optional<std::string> first_fenced_block(std::string_view text) {
    auto regions = fenced_regions(text);
    if (regions.empty()) return std::nullopt;
    return std::string(regions.front());
}

ordered_json parse_jsonish(std::string_view text) {
    try {
        return parse_at(text, true);
    } catch (const ParseError&) {
        return parse_at(text, false);
    }
}

std::string json_value_to_text(const ordered_json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_null()) return "";
    return value.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

Entries parse_structured_entries(std::string_view response_text) {
    auto obj = locate(response_text, '{');
    if (!obj) throw ParseError("no parsable object in model output");
    Entries out;
    for (auto it = obj->begin(); it != obj->end(); ++it) {
        out.emplace_back(it.key(), text::trim_copy(json_value_to_text(it.value())));
    }
    return out;
}

std::optional<std::string> find_entry(const Entries& entries, std::string_view key) {
    const std::string_view want = text::trim(key);
    for (const auto& [k, v] : entries) {
        if (text::trim(k) == want) return v;
    }
    return std::nullopt;
}

std::map<std::string, std::string> parse_structured(std::string_view response_text,
                                                    const std::vector<std::string>& expected_keys) {
    const Entries entries = parse_structured_entries(response_text);
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : entries) out.emplace(k, v);
    for (const auto& key : expected_keys) {
        auto v = find_entry(entries, key);
        if (!v) throw MissingKey(key);
        out[key] = *v;
    }
    return out;
}

TaggedAnswer extract_tagged_answer(std::string_view response_text, std::string_view tag) {
    if (tag.empty()) throw PreconditionError("tag must be non-empty");
    const std::string marker = "#" + text::to_lower_ascii(tag) + "#";
    const std::string lowered = text::to_lower_ascii(response_text);
    std::size_t pos = 0;
    while ((pos = lowered.find(marker, pos)) != std::string::npos) {
        std::string_view rest = response_text.substr(pos + marker.size());
        rest = text::trim(rest);
        if (!rest.empty() && rest.front() == ':') {
            rest.remove_prefix(1);
        } else if (text::starts_with(rest, kFullColon)) {
            rest.remove_prefix(kFullColon.size());
        }
        rest = text::trim(rest);
        if (!rest.empty() && !text::starts_with(text::to_lower_ascii(rest.substr(0, marker.size())), marker)) {
            return {std::string(rest), false};
        }
        pos += marker.size();
    }
    spdlog::debug("tag '#{}#' not found, using whole response", tag);
    return {text::trim_copy(response_text), true};
}

std::vector<std::string> parse_item_list(std::string_view response_text) {
    std::vector<std::string> items;
    auto push = [&](std::string s) {
        s = strip_wrapping_quotes(text::trim_copy(s));
        if (!s.empty()) items.push_back(std::move(s));
    };
    if (auto arr = locate(response_text, '[')) {
        const bool all_scalar = std::all_of(arr->begin(), arr->end(), [](const ordered_json& v) {
            return v.is_string() || v.is_number();
        });
        if (!arr->empty() && all_scalar) {
            for (const auto& v : *arr) push(json_value_to_text(v));
            return items;
        }
    }
    std::string_view body = response_text;
    std::string fenced;
    if (auto block = first_fenced_block(response_text); block && !text::trim(*block).empty()) {
        fenced = *block;
        body = fenced;
    }
    for (const auto& line : text::split_lines(body)) {
        if (text::starts_with(text::trim(line), "```")) continue;
        push(strip_list_marker(line));
    }
    return items;
}

StructuredReply chat_structured(Gateway& gateway, ChatRequest request,
                                const std::vector<std::string>& required_keys,
                                std::string_view retry_instruction) {
    StructuredReply reply;
    for (int round = 0; round < 2; ++round) {
        const ChatResponse resp = gateway.chat(request);
        ++reply.calls;
        reply.raw_text = resp.text;
        try {
            Entries entries = parse_structured_entries(resp.text);
            for (const auto& key : required_keys) {
                if (!find_entry(entries, key)) throw MissingKey(key);
            }
            reply.entries = std::move(entries);
            return reply;
        } catch (const ParseError& e) {
            if (round == 1) throw;
            spdlog::info("structured output for '{}' unusable ({}), re-asking once", request.tag, e.what());
            request.user_text += "\n";
            request.user_text += retry_instruction;
            request.variant += 0x10000;
        }
    }
    throw ParseError("unreachable");
}

}  // namespace jubensha::llm
