#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jubensha/errors.hpp"

namespace jubensha::agent {

class TemplateError : public Error {
public:
    using Error::Error;
};

enum class Locale { zh, en };

std::string to_string(Locale locale);
Locale locale_from_string(std::string_view s);

using Bindings = std::map<std::string, std::string>;

// Substitutes {identifier} placeholders. Braces not followed by an identifier
// and a closing brace are copied through, so JSON schema text survives.
std::string render_template(std::string_view tmpl, const Bindings& bindings);

// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view tmpl);

// "0th", "1st", "2nd", "3rd", "4th", ..., "11th", "12th", "13th", "21st".
std::string ordinal_en(std::size_t n);

class PromptLibrary {
public:
    static PromptLibrary builtin();
    // Files under root/<locale>/<name>.txt override the builtin set; keys.txt
    // entries override individual keys.
    static PromptLibrary from_directory(const std::filesystem::path& root);

    const std::string& raw(Locale locale, std::string_view name) const;
    std::string render(Locale locale, std::string_view name, const Bindings& bindings) const;
    bool has(Locale locale, std::string_view name) const;

    const std::string& key(Locale locale, std::string_view name) const;
    std::string render_key(Locale locale, std::string_view name, const Bindings& bindings) const;

    void set_template(Locale locale, std::string name, std::string text);
    void set_key(Locale locale, std::string name, std::string value);

private:
    void load_keys(Locale locale, std::string_view text);

    std::map<std::pair<Locale, std::string>, std::string> templates_;
    std::map<std::pair<Locale, std::string>, std::string> keys_;
};

namespace detail {
struct EmbeddedPrompt {
    const char* locale;
    const char* name;
    const char* text;
};
const std::vector<EmbeddedPrompt>& embedded_prompts();
}  // namespace detail

}  // namespace jubensha::agent
