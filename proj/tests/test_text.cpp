#include <doctest.h>

#include "jubensha/text.hpp"

using namespace jubensha;

TEST_CASE("utf8 round trip and malformed bytes") {
    const std::string s = "Curator Moss 说：你好";
    CHECK(text::encode_utf8(text::decode_utf8(s)) == s);
    CHECK(text::code_point_count("你好a") == 3);
    const auto bad = text::decode_utf8(std::string("a\xff") + "b");
    REQUIRE(bad.size() == 3);
    CHECK(bad[1] == 0xFFFD);
}

TEST_CASE("cjk dominance") {
    CHECK(text::is_cjk_dominant("我在船舱里"));
    CHECK_FALSE(text::is_cjk_dominant("I was in my cabin"));
    CHECK_FALSE(text::is_cjk_dominant(""));
}

TEST_CASE("trim handles ideographic space") {
    CHECK(text::trim("　 hello \n") == "hello");
    CHECK(text::trim("   ").empty());
    CHECK(text::rtrim_copy("  a  ") == "  a");
}

TEST_CASE("sentence splitting") {
    const auto s = text::split_sentences("At 18:10 I left. Then I slept! 我回房了。还有吗？");
    REQUIRE(s.size() == 4);
    CHECK(s[0] == "At 18:10 I left.");
    CHECK(s[2] == "我回房了。");
    CHECK(text::split_sentences("It cost 3.5 coins.").size() == 1);
}

TEST_CASE("split and join") {
    CHECK(text::split_whitespace(" a  b\tc ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(text::split_lines("a\r\nb") == std::vector<std::string>{"a", "b"});
    CHECK(text::join({"a", "b"}, ", ") == "a, b");
    CHECK(text::replace_all("aaa", "a", "bb") == "bbbbbb");
}

TEST_CASE("content terms") {
    const auto t = text::content_terms("The Engineer met Hale at 18:10");
    CHECK(t.count("engineer"));
    CHECK(t.count("18:10"));
    CHECK_FALSE(t.count("the"));
    CHECK(text::content_terms("船长室").count("船长"));
}
