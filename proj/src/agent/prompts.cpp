#include "jubensha/agent/prompts.hpp"

#include <cctype>

#include "jubensha/fsutil.hpp"
#include "jubensha/text.hpp"

namespace jubensha::agent {

std::string to_string(Locale locale) { return locale == Locale::zh ? "zh" : "en"; }

Locale locale_from_string(std::string_view s) {
    if (s == "zh") return Locale::zh;
    if (s == "en") return Locale::en;
    throw PreconditionError("unknown locale '" + std::string(s) + "', expected zh or en");
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Length of "{name}" at position i, or 0 when the brace is literal.
std::size_t placeholder_at(std::string_view t, std::size_t i) {
    if (t[i] != '{' || i + 1 >= t.size() || !ident_start(t[i + 1])) return 0;
    std::size_t j = i + 2;
    while (j < t.size() && ident_char(t[j])) ++j;
    if (j >= t.size() || t[j] != '}') return 0;
    return j - i + 1;
}

void strip_trailing_newlines(std::string& s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
}

}  // namespace

std::string render_template(std::string_view tmpl, const Bindings& bindings) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    for (std::size_t i = 0; i < tmpl.size();) {
        if (std::size_t len = placeholder_at(tmpl, i)) {
            const std::string name(tmpl.substr(i + 1, len - 2));
            auto it = bindings.find(name);
            if (it == bindings.end()) throw TemplateError("no binding for placeholder {" + name + "}");
            out += it->second;
            i += len;
        } else {
            out += tmpl[i++];
        }
    }
    return out;
}

std::vector<std::string> template_placeholders(std::string_view tmpl) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (std::size_t len = placeholder_at(tmpl, i)) {
            std::string name(tmpl.substr(i + 1, len - 2));
            bool seen = false;
            for (const auto& n : names) seen = seen || n == name;
            if (!seen) names.push_back(std::move(name));
            i += len - 1;
        }
    }
    return names;
}

std::string ordinal_en(std::size_t n) {
    const std::size_t mod100 = n % 100;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        switch (n % 10) {
            case 1: suffix = "st"; break;
            case 2: suffix = "nd"; break;
            case 3: suffix = "rd"; break;
            default: break;
        }
    }
    return std::to_string(n) + suffix;
}

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (const auto& p : detail::embedded_prompts()) {
        const Locale loc = locale_from_string(p.locale);
        if (std::string_view(p.name) == "keys") {
            lib.load_keys(loc, p.text);
        } else {
            lib.set_template(loc, p.name, p.text);
        }
    }
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw IoError("prompt directory not found: " + root.string());
    PromptLibrary lib = builtin();
    for (Locale loc : {Locale::zh, Locale::en}) {
        const fs::path dir = root / to_string(loc);
        if (!fs::is_directory(dir)) continue;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            const std::string name = entry.path().stem().string();
            std::string body = read_text_file(entry.path());
            if (name == "keys") {
                lib.load_keys(loc, body);
            } else {
                lib.set_template(loc, name, std::move(body));
            }
        }
    }
    return lib;
}

void PromptLibrary::load_keys(Locale locale, std::string_view text) {
    for (const auto& line : text::split_lines(text)) {
        const std::string_view l = text::trim(line);
        if (l.empty() || l.front() == '#') continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) throw FormatError("keys line without '=': " + std::string(l));
        set_key(locale, text::trim_copy(l.substr(0, eq)), text::trim_copy(l.substr(eq + 1)));
    }
}

void PromptLibrary::set_template(Locale locale, std::string name, std::string body) {
    strip_trailing_newlines(body);
    templates_[{locale, std::move(name)}] = std::move(body);
}

void PromptLibrary::set_key(Locale locale, std::string name, std::string value) {
    keys_[{locale, std::move(name)}] = std::move(value);
}

bool PromptLibrary::has(Locale locale, std::string_view name) const {
    return templates_.count({locale, std::string(name)}) > 0;
}

const std::string& PromptLibrary::raw(Locale locale, std::string_view name) const {
    auto it = templates_.find({locale, std::string(name)});
    if (it == templates_.end()) {
        throw TemplateError("no template '" + std::string(name) + "' for locale " + to_string(locale));
    }
    return it->second;
}

std::string PromptLibrary::render(Locale locale, std::string_view name, const Bindings& bindings) const {
    return render_template(raw(locale, name), bindings);
}

const std::string& PromptLibrary::key(Locale locale, std::string_view name) const {
    auto it = keys_.find({locale, std::string(name)});
    if (it == keys_.end()) {
        throw TemplateError("no key '" + std::string(name) + "' for locale " + to_string(locale));
    }
    return it->second;
}

std::string PromptLibrary::render_key(Locale locale, std::string_view name, const Bindings& bindings) const {
    return render_template(key(locale, name), bindings);
}

}  // namespace jubensha::agent
