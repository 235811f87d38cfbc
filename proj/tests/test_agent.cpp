#include <doctest.h>

#include <algorithm>

#include "jubensha/agent/agent.hpp"
#include "jubensha/text.hpp"
#include "support.hpp"

using namespace jubensha;
using namespace jubensha::agent;

namespace {

struct Rig {
    testing::MockRig mock;
    PromptLibrary prompts = PromptLibrary::builtin();
    memory::MemoryStore memory{"Nurse Quill"};

    explicit Rig(bool offline = true) : mock(testing::mock_rig(0, offline)) {}

    Agent agent(const std::string& name = "Nurse Quill", AgentConfig cfg = {}) {
        return Agent(testing::greywater(), testing::greywater().character(name), *mock.gateway, prompts, Locale::en,
                     cfg);
    }
    std::size_t count(const std::string& tag) const {
        const auto tags = mock.backend->request_tags();
        return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), tag));
    }
};

std::vector<std::string> others_of(const std::string& name) {
    std::vector<std::string> out;
    for (const auto& n : testing::greywater().player_names()) {
        if (n != name) out.push_back(n);
    }
    return out;
}

}  // namespace

TEST_CASE("initial answer extracts the tagged text") {
    Rig rig(false);
    rig.mock.backend->set_canned("answer", {"#Answer#: I was in my cabin."});
    auto a = rig.agent();
    CHECK(a.generate_initial_answer("Where were you?", "Host", {}) == "I was in my cabin.");
    CHECK_THROWS_AS(a.generate_initial_answer("  ", "Host", {}), PreconditionError);
    const auto req = rig.mock.backend->requests().back();
    CHECK(req.bindings.at("relevant_memories") == rig.prompts.key(Locale::en, "no_memories"));
}

TEST_CASE("offline answer to the host is first person") {
    Rig rig;
    auto a = rig.agent();
    const auto answer = a.generate_initial_answer(
        "Please introduce your character, then tell us your timeline for the day.", "Host", {});
    CHECK_FALSE(text::trim(answer).empty());
    CHECK(answer.find('#') == std::string::npos);
}

TEST_CASE("question decomposition") {
    Rig rig(false);
    auto a = rig.agent();
    rig.mock.backend->set_canned("decompose_question",
                                 {"Please introduce your character first,\nthen describe your timeline,\n"
                                  "and finally say what you found odd."});
    CHECK(a.decompose_question("Host said: ...").size() == 3);
    rig.mock.backend->set_canned("decompose_question", {"Where were you at 18:10?"});
    CHECK(a.decompose_question("Where were you at 18:10?").size() == 1);
    rig.mock.backend->set_canned("decompose_question", {"   "});
    CHECK(a.decompose_question("Where were you?") == std::vector<std::string>{"Where were you?"});
}

TEST_CASE("timeline extraction is cached") {
    Rig rig;
    auto a = rig.agent("Engineer Pike");
    const auto& facts = a.timeline_facts();
    CHECK(std::count_if(facts.begin(), facts.end(), [](const TimelineFact& f) { return f.has_time_reference; }) >= 2);
    a.timeline_facts();
    CHECK(rig.count("extract_timeline") == 1);
}

TEST_CASE("judges return one verdict per fact") {
    Rig rig;
    auto a = rig.agent();
    const auto facts = a.timeline_facts();
    const auto useful = a.judge_fact_usefulness("What is your name?", facts);
    CHECK(useful.size() == facts.size());
    const auto timed = a.judge_fact_usefulness("What did you do that evening, hour by hour?", facts);
    for (std::size_t i = 0; i < facts.size(); ++i) {
        if (facts[i].has_time_reference) CHECK(timed[i]);
    }
    CHECK_THROWS_AS(a.judge_fact_usefulness("q", {}), PreconditionError);
    CHECK_THROWS_AS(a.judge_fact_inclusion("a", {}), PreconditionError);

    const std::vector<TimelineFact> two = {make_fact("At 18:10, I checked the pressure valves."),
                                           make_fact("At 21:40, I sang in the observatory dome.")};
    const auto inc = a.judge_fact_inclusion("At 18:10, I checked the pressure valves.", two);
    REQUIRE(inc.size() == 2);
    CHECK(inc[0]);
    CHECK_FALSE(inc[1]);
}

TEST_CASE("unparseable judge output is conservative") {
    Rig rig(false);
    rig.mock.backend->set_canned("judge_useful", {"I cannot decide."});
    auto a = rig.agent();
    const std::vector<TimelineFact> f = {make_fact("At 18:10, x."), make_fact("At 19:00, y.")};
    CHECK(a.judge_fact_usefulness("q", f) == std::vector<bool>{false, false});
    CHECK(rig.count("judge_useful") == 2);
}

TEST_CASE("verdict parsing") {
    const std::vector<std::string> keys = {"Judgment result of the 0th timeline information",
                                           "Judgment result of the 1st timeline information"};
    CHECK(parse_verdicts({{keys[0], "True"}, {keys[1], "False"}}, keys, 2) == std::vector<bool>{true, false});
    CHECK(parse_verdicts({{"the 1st one", "Correct"}, {"the 0th one", "Incorrect"}}, keys, 2) ==
          std::vector<bool>{false, true});
    CHECK(parse_verdicts({{"a", "正确"}, {"b", "是"}}, keys, 2) == std::vector<bool>{true, true});
    CHECK(parse_verdicts({{keys[0], "True"}}, keys, 2) == std::vector<bool>{true, false});
    CHECK(verdict_is_true("Correct"));
    CHECK_FALSE(verdict_is_true("Incorrect"));
    CHECK_FALSE(verdict_is_true("错误"));
}

TEST_CASE("refinement adds the missing facts") {
    Rig rig;
    auto a = rig.agent();
    const std::string initial = "I am Nurse Quill.";
    const std::vector<TimelineFact> missing = {make_fact("At 18:10, Nurse Quill checked on the Professor.")};
    const auto refined = a.refine_answer("Host said: tell us your timeline", initial, missing);
    CHECK(refined.size() > initial.size());
    CHECK(refined.find("18:10") != std::string::npos);
    CHECK_THROWS_AS(a.refine_answer("q", initial, {}), PreconditionError);

    Rig broken(false);
    broken.mock.backend->set_canned("refine", {"not json"});
    auto b = broken.agent();
    CHECK(b.refine_answer("q", initial, missing) == initial);
}

TEST_CASE("answer decomposition and verification") {
    Rig rig;
    auto a = rig.agent("Engineer Pike");
    CHECK(a.decompose_answer("Hello everyone").empty());
    CHECK_THROWS_AS(a.decompose_answer(""), PreconditionError);
    const auto facts = a.decompose_answer("At 18:10 I checked the pressure valves. I like tea.");
    for (const auto& f : facts) CHECK_FALSE(text::trim(f.text).empty());
    CHECK(a.verify_facts({}).empty());
    const auto v = a.verify_facts(std::vector<TimelineFact>{make_fact("At 03:00, Engineer Pike flew a helicopter.")});
    CHECK(v == std::vector<bool>{false});
}

TEST_CASE("respond stops early when an attempt passes") {
    Rig rig(false);
    const std::string long_answer = []() {
        std::string s = "At 18:10 I checked the valves.";
        for (int i = 0; i < 40; ++i) s += " word";
        return s;
    }();
    rig.mock.backend->set_canned("answer", {"#Answer#: " + long_answer});
    rig.mock.backend->set_canned("extract_timeline", {"At 18:10, I checked the valves."});
    rig.mock.backend->set_canned("decompose_question", {"Where were you?"});
    rig.mock.backend->set_canned("judge_useful", {R"({"x": "True"})"});
    rig.mock.backend->set_canned("judge_included", {R"({"x": "True"})"});
    rig.mock.backend->set_canned("decompose_answer", {"At 18:10, Nurse Quill checked the valves."});
    rig.mock.backend->set_canned("verify", {R"({"x": "Correct"})"});
    AgentConfig cfg;
    cfg.sv_max_attempts = 3;
    auto a = rig.agent("Nurse Quill", cfg);
    const auto fa = a.respond("Where were you?", "Chef Rowan", rig.memory);
    CHECK(fa.attempts.size() == 1);
    CHECK(fa.passed_threshold);
    CHECK(fa.verified);
    CHECK(fa.text == long_answer);
    CHECK(rig.count("refine") == 0);
}

TEST_CASE("respond keeps the best attempt when none passes") {
    Rig rig(false);
    rig.mock.backend->set_responder("answer", [](const llm::ChatRequest& r, std::uint64_t) {
        static const char* texts[] = {"At 18:10 I slept.", "At 18:10 I slept. At 19:00 I ate.", "At 18:10 I ate."};
        return std::string("#Answer#: ") + texts[r.variant % 3];
    });
    rig.mock.backend->set_canned("extract_timeline", {"At 18:10, I slept."});
    rig.mock.backend->set_canned("decompose_question", {"Where?"});
    rig.mock.backend->set_canned("judge_useful", {R"({"x": "False"})"});
    rig.mock.backend->set_responder("decompose_answer", [](const llm::ChatRequest& r, std::uint64_t) {
        return text::join(text::split_sentences(r.bindings.at("statement")), "\n");
    });
    rig.mock.backend->set_responder("verify", [](const llm::ChatRequest& r, std::uint64_t) {
        std::string out = "{";
        const auto lines = text::split_lines(r.bindings.at("fact_lines"));
        for (std::size_t i = 0; i < lines.size(); ++i) {
            out += (i ? ", " : "") + std::string("\"") + r.response_keys[i] + "\": \"" + (i == 0 ? "Correct" : "Incorrect") + "\"";
        }
        return out + "}";
    });
    AgentConfig cfg;
    cfg.sv_max_attempts = 3;
    auto a = rig.agent("Nurse Quill", cfg);
    const auto fa = a.respond("Where?", "Chef Rowan", rig.memory);
    REQUIRE(fa.attempts.size() == 3);
    CHECK_FALSE(fa.passed_threshold);
    CHECK(fa.chosen_index == best_candidate(fa.attempts));
    CHECK(fa.text == fa.attempts[fa.chosen_index].text);
}

TEST_CASE("respond needs one successful attempt") {
    Rig rig(false);
    rig.mock.backend->set_responder("answer", [](const llm::ChatRequest&, std::uint64_t) -> std::string {
        throw llm::TransportError("connection refused");
    });
    AgentConfig cfg;
    cfg.sv_max_attempts = 2;
    auto a = rig.agent("Nurse Quill", cfg);
    try {
        a.respond("Where?", "Chef Rowan", rig.memory);
        FAIL("expected AgentPipelineError");
    } catch (const AgentPipelineError& e) {
        CHECK(e.attempt_errors().size() == 2);
    }
}

TEST_CASE("pipelines call only their stages") {
    for (Pipeline p : {Pipeline::no_mr, Pipeline::mr, Pipeline::mr_sr, Pipeline::mr_sr_sv}) {
        Rig rig;
        rig.memory.record(*rig.mock.gateway, "Chef Rowan said: I served soup at 19:00.", 0, memory::RecordKind::utterance);
        AgentConfig cfg;
        cfg.pipeline = p;
        cfg.sv_max_attempts = 1;
        auto a = rig.agent("Nurse Quill", cfg);
        const auto fa = a.respond("What did you do at 18:10?", "Chef Rowan", rig.memory);
        INFO(to_string(p));
        CHECK(rig.count("answer") == 1);
        CHECK((rig.count("extract_timeline") > 0) == uses_refinement(p));
        CHECK((rig.count("verify") + rig.count("decompose_answer") > 0) == uses_verification(p));
        const auto req = rig.mock.backend->requests().front();
        CHECK((req.bindings.at("relevant_memories") == rig.prompts.key(Locale::en, "no_memories")) == !uses_memory(p));
        CHECK(fa.verified == uses_verification(p));
    }
}

TEST_CASE("policies depend on who asks") {
    Rig rig;
    auto a = rig.agent();
    CHECK(a.policy_for(a.host_name()) == VerificationPolicy::host());
    CHECK(a.policy_for("Chef Rowan") == VerificationPolicy::player());
}

TEST_CASE("target selection") {
    Rig rig(false);
    auto a = rig.agent("Nurse Quill");
    const auto others = others_of("Nurse Quill");
    rig.mock.backend->set_canned("select_target", {R"({"The name of the person you want to ask": "Chef Rowan"})"});
    rig.mock.backend->set_canned("ask_question", {R"({"The question you want to ask": "Where were you at 19:00?"})"});
    auto r = a.ask_question(rig.memory, others, 1);
    CHECK(r.target == "Chef Rowan");
    CHECK(r.question == "Where were you at 19:00?");

    rig.mock.backend->set_canned("select_target", {R"({"The name of the person you want to ask": "Nurse Quill"})"});
    rig.mock.backend->set_canned("ask_question", {"nothing useful"});
    r = a.ask_question(rig.memory, others, 2);
    CHECK(r.target != "Nurse Quill");
    CHECK(std::find(others.begin(), others.end(), r.target) != others.end());
    CHECK_FALSE(r.question.empty());

    const std::vector<std::string> one = {"Engineer Pike"};
    CHECK(a.ask_question(rig.memory, one, 3).target == "Engineer Pike");
    CHECK_THROWS_AS(a.ask_question(rig.memory, std::vector<std::string>{}, 0), PreconditionError);
    CHECK_THROWS_AS(a.ask_question(rig.memory, std::vector<std::string>{"Nurse Quill"}, 0), PreconditionError);
}

TEST_CASE("candidate matching") {
    const std::vector<std::string> zh = {"张大副", "玲船医", "王船长", "李水手"};
    CHECK(match_candidate("我的投票选择是C. 玲船医。", zh) == std::optional<std::string>("玲船医"));
    const std::vector<std::string> names = {"Pike", "Engineer Pike", "Moss"};
    CHECK(match_candidate("I vote Engineer Pike, not Moss", names) == std::optional<std::string>("Engineer Pike"));
    CHECK(match_candidate("Moss or Pike", names) == std::optional<std::string>("Moss"));
    CHECK_FALSE(match_candidate("nobody", names));
}

TEST_CASE("voting") {
    Rig rig(false);
    auto a = rig.agent("Nurse Quill");
    const auto names = testing::greywater().player_names();
    rig.mock.backend->set_canned("vote", {"#Answer#: My vote is B. Engineer Pike."});
    auto v = a.vote(rig.memory, names, "Vote now.", false, "", 0);
    CHECK(v.choice == std::optional<std::string>("Engineer Pike"));
    CHECK(v.calls == 1);

    rig.mock.backend->set_canned("vote", {"#Answer#: zzzz qqqq"});
    v = a.vote(rig.memory, names, "Vote now.", true, "context", 1);
    CHECK_FALSE(v.choice);
    CHECK(v.calls == 2);
    CHECK(rig.mock.backend->requests().back().bindings.at("relevant_memories") == "context");
}
