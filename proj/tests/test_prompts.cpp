#include <doctest.h>

#include <set>

#include "jubensha/agent/prompts.hpp"
#include "jubensha/fsutil.hpp"
#include "support.hpp"

using namespace jubensha;
using namespace jubensha::agent;

TEST_CASE("render substitutes identifiers only") {
    CHECK(render_template("Hi {name}, {\"k\": 1}", {{"name", "Pike"}}) == "Hi Pike, {\"k\": 1}");
    CHECK_THROWS_AS(render_template("{missing}", {}), TemplateError);
    CHECK(template_placeholders("{a} {b} {a} { c }") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("ordinals") {
    CHECK(ordinal_en(0) == "0th");
    CHECK(ordinal_en(1) == "1st");
    CHECK(ordinal_en(2) == "2nd");
    CHECK(ordinal_en(3) == "3rd");
    CHECK(ordinal_en(11) == "11th");
    CHECK(ordinal_en(12) == "12th");
    CHECK(ordinal_en(21) == "21st");
}

TEST_CASE("embedded prompts match the prompt files") {
    const auto lib = PromptLibrary::builtin();
    const auto disk = PromptLibrary::from_directory(testing::source_path("prompts"));
    for (const auto& p : detail::embedded_prompts()) {
        if (std::string(p.name) == "keys") continue;
        const Locale l = locale_from_string(p.locale);
        CHECK(lib.raw(l, p.name) == disk.raw(l, p.name));
    }
    CHECK(lib.key(Locale::en, "answer_tag") == "Answer");
    CHECK(lib.key(Locale::zh, "answer_tag") == "回答");
}

TEST_CASE("both locales share templates and placeholders") {
    const auto lib = PromptLibrary::builtin();
    std::set<std::string> names;
    for (const auto& p : detail::embedded_prompts()) names.insert(p.name);
    for (const auto& n : names) {
        if (n == "keys") continue;
        INFO(n);
        REQUIRE(lib.has(Locale::en, n));
        REQUIRE(lib.has(Locale::zh, n));
        const auto en = template_placeholders(lib.raw(Locale::en, n));
        const auto zh = template_placeholders(lib.raw(Locale::zh, n));
        CHECK(std::set<std::string>(en.begin(), en.end()) == std::set<std::string>(zh.begin(), zh.end()));
    }
}

TEST_CASE("directory overrides") {
    const auto dir = testing::scratch_dir("prompts");
    std::filesystem::create_directories(dir / "en");
    write_text_file(dir / "en" / "memory_line.txt", "{speaker} -> {addressee}: {utterance}\n");
    write_text_file(dir / "en" / "keys.txt", "answer_tag = Reply\n");
    const auto lib = PromptLibrary::from_directory(dir);
    CHECK(lib.render(Locale::en, "memory_line", {{"speaker", "a"}, {"addressee", "b"}, {"utterance", "c"}}) ==
          "a -> b: c");
    CHECK(lib.key(Locale::en, "answer_tag") == "Reply");
    CHECK(lib.key(Locale::en, "question_tag") == "Question");
    CHECK_THROWS_AS(PromptLibrary::from_directory(dir / "nope"), IoError);
    CHECK_THROWS_AS(locale_from_string("fr"), PreconditionError);
}
