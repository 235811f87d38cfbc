#include <doctest.h>

#include "jubensha/llm/structured.hpp"
#include "support.hpp"

using namespace jubensha;
using namespace jubensha::llm;

TEST_CASE("fenced json with a CJK key") {
    const auto m = parse_structured("```json\n{\"你想提问的人的名字\": \"玲船医\"}\n```", {"你想提问的人的名字"});
    REQUIRE(m.size() == 1);
    CHECK(m.at("你想提问的人的名字") == "玲船医");
}

TEST_CASE("fence is optional and prose is rejected") {
    CHECK(parse_structured(R"({"a":"1"})", {"a"}).at("a") == "1");
    CHECK_THROWS_AS(parse_structured("no braces at all", {}), ParseError);
    CHECK_THROWS_AS(parse_structured(R"({"a":"1"})", {"b"}), MissingKey);
}

TEST_CASE("python habits are tolerated") {
    const auto m = parse_structured("Sure!\n{'x': True, 'y': None, z: '2',}\nHope that helps.", {"x", "y", "z"});
    CHECK(m.at("x") == "true");
    CHECK(m.at("y") == "");
    CHECK(m.at("z") == "2");
    const auto full = parse_structured("{“判断”：“正确”，“理由”：“无”}", {"判断"});
    CHECK(full.at("判断") == "正确");
}

TEST_CASE("tagged answers") {
    auto a = extract_tagged_answer("#Answer#: Hello everyone, I am...", "Answer");
    CHECK(a.text == "Hello everyone, I am...");
    CHECK_FALSE(a.fallback);
    a = extract_tagged_answer("#提问#：张大副，你在做什么？", "提问");
    CHECK(a.text == "张大副，你在做什么？");
    a = extract_tagged_answer("no marker here", "Answer");
    CHECK(a.text == "no marker here");
    CHECK(a.fallback);
    CHECK(extract_tagged_answer("#回答#：我的投票选择是C. 玲船医。", "回答").text == "我的投票选择是C. 玲船医。");
    CHECK(extract_tagged_answer("#Answer#:\n#Answer#: In the galley.", "Answer").text == "In the galley.");
    CHECK_THROWS_AS(extract_tagged_answer("x", ""), PreconditionError);
}

TEST_CASE("item lists") {
    CHECK(parse_item_list("1. Please introduce yourself\n2) Where were you?\n\n- Who saw you?") ==
          std::vector<std::string>{"Please introduce yourself", "Where were you?", "Who saw you?"});
    CHECK(parse_item_list("['Please introduce your character first,', 'then the timeline']") ==
          std::vector<std::string>{"Please introduce your character first,", "then the timeline"});
    CHECK(parse_item_list("   \n").empty());
}

TEST_CASE("chat_structured re-asks once") {
    auto rig = testing::mock_rig(0, false);
    int calls = 0;
    rig.backend->set_responder("s", [&](const ChatRequest& r, std::uint64_t) {
        ++calls;
        return calls == 1 ? std::string("garbage") : std::string(R"({"k": "v"})");
    });
    ChatRequest req;
    req.tag = "s";
    req.user_text = "give json";
    const auto reply = chat_structured(*rig.gateway, req, {"k"}, "Reply with JSON only.");
    CHECK(reply.calls == 2);
    CHECK(find_entry(reply.entries, "k") == std::optional<std::string>("v"));
    const auto log = rig.backend->requests();
    REQUIRE(log.size() == 2);
    CHECK(log[1].user_text.find("Reply with JSON only.") != std::string::npos);

    rig.backend->set_canned("t", {"never json"});
    req.tag = "t";
    CHECK_THROWS_AS(chat_structured(*rig.gateway, req, {"k"}, "again"), ParseError);
}
