#include <doctest.h>

#include <algorithm>

#include "jubensha/game/game.hpp"
#include "support.hpp"

using namespace jubensha;
using namespace jubensha::game;

namespace {

std::vector<Ballot> ballots_for(std::initializer_list<const char*> choices) {
    std::vector<Ballot> out;
    int i = 0;
    for (const char* c : choices) {
        Ballot b;
        b.voter = "v" + std::to_string(i++);
        if (c) b.choice = c;
        out.push_back(b);
    }
    return out;
}

std::size_t count_events(const std::vector<TranscriptEvent>& t, Stage s, EventKind k) {
    return static_cast<std::size_t>(
        std::count_if(t.begin(), t.end(), [&](const TranscriptEvent& e) { return e.stage == s && e.kind == k; }));
}

const std::vector<std::string> kPlayers = {"M", "A", "B", "C"};

}  // namespace

TEST_CASE("tally requires a strict plurality") {
    auto t = tally(ballots_for({"M", "M", "M", "A"}), "M", kPlayers);
    CHECK(t.winner == Winner::civilians);
    CHECK(t.murderer_vote_fraction == 0.75);
    t = tally(ballots_for({"M", "M", "A", "A"}), "M", kPlayers);
    CHECK(t.winner == Winner::murderer);
    t = tally(ballots_for({nullptr, nullptr, "Ghost"}), "M", kPlayers);
    CHECK(t.winner == Winner::murderer);
    CHECK(t.no_valid_ballots);
    CHECK(t.invalid == 3);
    CHECK(t.murderer_vote_fraction == 0.0);
    CHECK_THROWS_AS(tally(std::vector<Ballot>{}, "M", kPlayers), PreconditionError);
}

TEST_CASE("murderer identification accuracy") {
    GameOutcome o;
    for (int i = 0; i < 40; ++i) {
        Ballot b;
        b.voter = "v";
        b.memoryless_round = 1 + i % 10;
        b.choice = i < 25 ? "M" : "A";
        o.memoryless_ballots.push_back(b);
    }
    CHECK(murderer_identification_accuracy(o, "M") == doctest::Approx(0.625));
    for (auto& b : o.memoryless_ballots) b.choice = "M";
    CHECK(murderer_identification_accuracy(o, "M") == 1.0);
    for (auto& b : o.memoryless_ballots) b.choice = "A";
    CHECK(murderer_identification_accuracy(o, "M") == 0.0);
    for (auto& b : o.memoryless_ballots) b.choice.reset();
    CHECK_THROWS_AS(murderer_identification_accuracy(o, "M"), NoValidBallots);
    o.memoryless_ballots.clear();
    CHECK_THROWS_AS(murderer_identification_accuracy(o, "M"), PreconditionError);
}

TEST_CASE("config validation") {
    GameConfig c;
    CHECK_NOTHROW(c.validate());
    c.open_rounds_pre_clues = -1;
    CHECK_THROWS_AS(c.validate(), PreconditionError);
    c = {};
    c.sv_max_attempts = 0;
    CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("full game follows the stage algebra") {
    auto rig = testing::mock_rig(11);
    const auto prompts = agent::PromptLibrary::builtin();
    GameConfig cfg;
    cfg.seed = 11;
    const auto r = run_game(testing::greywater(), cfg, *rig.gateway, prompts);
    const auto& t = r.transcript;
    CHECK(count_events(t, Stage::self_intro, EventKind::answer) == 4);
    CHECK(count_events(t, Stage::initial_q, EventKind::question) == 12);
    CHECK(count_events(t, Stage::initial_q, EventKind::answer) == 12);
    CHECK(count_events(t, Stage::open_q_pre_clues, EventKind::question) == 8);
    CHECK(count_events(t, Stage::open_q_post_clues, EventKind::question) == 12);
    CHECK(count_events(t, Stage::open_q_post_clues, EventKind::answer) == 12);
    CHECK(r.outcome.ballots.size() == 4);
    CHECK(r.outcome.memoryless_ballots.size() == 40);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].turn == static_cast<std::int64_t>(i));
    CHECK(t.back().stage == Stage::outcome);
    CHECK(r.memories.size() == 4);
    for (const auto& m : r.memories) CHECK_FALSE(m.empty());

    // The murderer's role is never spoken before the outcome.
    const auto& pike = testing::greywater().murderer();
    for (const auto& e : t) {
        if (e.stage == Stage::outcome || e.kind == EventKind::system) continue;
        CHECK(e.utterance.find(pike.mission) == std::string::npos);
    }
}

TEST_CASE("games are deterministic") {
    const auto prompts = agent::PromptLibrary::builtin();
    GameConfig cfg;
    cfg.seed = 5;
    cfg.open_rounds_pre_clues = 1;
    cfg.open_rounds_post_clues = 1;
    cfg.memoryless_vote_count = 2;
    auto a = testing::mock_rig(5);
    auto b = testing::mock_rig(5);
    const auto ra = run_game(testing::greywater(), cfg, *a.gateway, prompts);
    const auto rb = run_game(testing::greywater(), cfg, *b.gateway, prompts);
    CHECK(ra.transcript == rb.transcript);
    CHECK(ra.outcome == rb.outcome);
}

TEST_CASE("zero open rounds means no open questioning") {
    auto rig = testing::mock_rig(1);
    GameConfig cfg;
    cfg.open_rounds_pre_clues = 0;
    cfg.open_rounds_post_clues = 0;
    cfg.memoryless_vote_count = 1;
    cfg.pipeline = agent::Pipeline::mr;
    const auto r = run_game(testing::greywater(), cfg, *rig.gateway, agent::PromptLibrary::builtin());
    for (const auto& e : r.transcript) {
        CHECK(e.stage != Stage::open_q_pre_clues);
        CHECK(e.stage != Stage::open_q_post_clues);
    }
    CHECK(r.outcome.memoryless_ballots.size() == 4);
}

TEST_CASE("invalid pack is rejected before any call") {
    auto rig = testing::mock_rig();
    auto pack = testing::greywater();
    pack.characters.pop_back();
    pack.characters.pop_back();
    CHECK_THROWS_AS(run_game(pack, GameConfig{}, *rig.gateway, agent::PromptLibrary::builtin()), PreconditionError);
    CHECK(rig.backend->requests().empty());
}

TEST_CASE("gateway failure carries the partial transcript") {
    auto rig = testing::mock_rig();
    rig.backend->set_responder("vote", [](const llm::ChatRequest&, std::uint64_t) -> std::string {
        throw llm::AuthError("key revoked");
    });
    GameConfig cfg;
    cfg.pipeline = agent::Pipeline::mr;
    cfg.open_rounds_pre_clues = 0;
    cfg.open_rounds_post_clues = 0;
    try {
        run_game(testing::greywater(), cfg, *rig.gateway, agent::PromptLibrary::builtin());
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == Stage::voting);
        CHECK_FALSE(e.partial_transcript().empty());
        CHECK_THROWS_AS(std::rethrow_exception(e.cause()), llm::AuthError);
    }
}

TEST_CASE("transcript text skips system events") {
    TranscriptEvent sys;
    sys.kind = EventKind::system;
    sys.utterance = "secret";
    TranscriptEvent q;
    q.kind = EventKind::question;
    q.speaker = "A";
    q.addressee = "B";
    q.utterance = "Where?";
    const std::vector<TranscriptEvent> es = {sys, q};
    const auto text = transcript_text(es, agent::PromptLibrary::builtin(), agent::Locale::en);
    CHECK(text.find("secret") == std::string::npos);
    CHECK(text.find("Where?") != std::string::npos);
}

TEST_CASE("enum strings round trip") {
    for (Stage s : {Stage::distribute, Stage::self_intro, Stage::initial_q, Stage::open_q_pre_clues, Stage::clue_reveal,
                    Stage::open_q_post_clues, Stage::voting, Stage::outcome}) {
        CHECK(stage_from_string(to_string(s)) == s);
    }
    CHECK(winner_from_string("civilians") == Winner::civilians);
    CHECK_THROWS_AS(event_kind_from_string("shout"), SchemaError);
}
