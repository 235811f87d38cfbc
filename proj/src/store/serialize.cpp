#include "jubensha/store/serialize.hpp"

#include "jubensha/errors.hpp"

namespace jubensha::store {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError("missing-field", std::string(key) + " is required");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw SchemaError("field-type", std::string(key) + " has the wrong type");
    }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? field<T>(j, key) : fallback;
}

}  // namespace

ordered_json to_json(const game::GameConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["pipeline"] = agent::to_string(c.pipeline);
    j["sv_max_attempts"] = c.sv_max_attempts;
    j["open_rounds_pre_clues"] = c.open_rounds_pre_clues;
    j["open_rounds_post_clues"] = c.open_rounds_post_clues;
    j["memoryless_vote_count"] = c.memoryless_vote_count;
    j["locale"] = agent::to_string(c.locale);
    j["length_unit"] = agent::to_string(c.length_unit);
    j["retrieval_k"] = c.retrieval_k;
    j["temperature"] = c.temperature;
    return j;
}

game::GameConfig game_config_from_json(const json& j) {
    game::GameConfig c;
    c.seed = field<std::uint64_t>(j, "seed");
    c.pipeline = agent::pipeline_from_string(field<std::string>(j, "pipeline"));
    c.sv_max_attempts = field<int>(j, "sv_max_attempts");
    c.open_rounds_pre_clues = field<int>(j, "open_rounds_pre_clues");
    c.open_rounds_post_clues = field<int>(j, "open_rounds_post_clues");
    c.memoryless_vote_count = field<int>(j, "memoryless_vote_count");
    c.locale = agent::locale_from_string(field<std::string>(j, "locale"));
    c.length_unit = agent::length_unit_from_string(field<std::string>(j, "length_unit"));
    c.retrieval_k = field<std::size_t>(j, "retrieval_k");
    c.temperature = field<double>(j, "temperature");
    return c;
}

ordered_json to_json(const game::TranscriptEvent& e) {
    ordered_json j;
    j["turn"] = e.turn;
    j["stage"] = game::to_string(e.stage);
    j["kind"] = game::to_string(e.kind);
    j["round"] = e.round;
    j["speaker"] = e.speaker;
    j["addressee"] = e.addressee;
    j["utterance"] = e.utterance;
    if (e.answer) {
        const auto& a = *e.answer;
        j["answer"] = {{"attempts", a.attempts},
                       {"chosen_index", a.chosen_index},
                       {"passed_threshold", a.passed_threshold},
                       {"verified", a.verified},
                       {"score", a.score},
                       {"length", a.length},
                       {"length_unit", agent::to_string(a.length_unit)}};
    }
    return j;
}

game::TranscriptEvent transcript_event_from_json(const json& j) {
    game::TranscriptEvent e;
    e.turn = field<std::int64_t>(j, "turn");
    e.stage = game::stage_from_string(field<std::string>(j, "stage"));
    e.kind = game::event_kind_from_string(field<std::string>(j, "kind"));
    e.round = field_or<std::uint32_t>(j, "round", 0);
    e.speaker = field<std::string>(j, "speaker");
    e.addressee = field<std::string>(j, "addressee");
    e.utterance = field<std::string>(j, "utterance");
    if (auto it = j.find("answer"); it != j.end() && !it->is_null()) {
        game::AnswerMeta a;
        a.attempts = field<std::int64_t>(*it, "attempts");
        a.chosen_index = field<std::int64_t>(*it, "chosen_index");
        a.passed_threshold = field<bool>(*it, "passed_threshold");
        a.verified = field<bool>(*it, "verified");
        a.score = field<double>(*it, "score");
        a.length = field<std::int64_t>(*it, "length");
        a.length_unit = agent::length_unit_from_string(field<std::string>(*it, "length_unit"));
        e.answer = a;
    }
    return e;
}

ordered_json to_json(const game::Ballot& b) {
    ordered_json j;
    j["voter"] = b.voter;
    j["choice"] = b.choice ? ordered_json(*b.choice) : ordered_json(nullptr);
    j["memoryless_round"] = b.memoryless_round;
    j["utterance"] = b.utterance;
    return j;
}

game::Ballot ballot_from_json(const json& j) {
    game::Ballot b;
    b.voter = field<std::string>(j, "voter");
    if (auto it = j.find("choice"); it != j.end() && !it->is_null()) b.choice = field<std::string>(j, "choice");
    b.memoryless_round = field<std::uint32_t>(j, "memoryless_round");
    b.utterance = field<std::string>(j, "utterance");
    return b;
}

ordered_json to_json(const std::string& agent, const memory::MemoryRecord& r) {
    ordered_json j;
    j["agent"] = agent;
    j["seq"] = r.seq;
    j["turn"] = r.turn;
    j["kind"] = memory::to_string(r.kind);
    j["text"] = r.text;
    ordered_json v = ordered_json::array();
    for (double x : r.embedding.values()) v.push_back(x);
    j["embedding"] = std::move(v);
    return j;
}

ordered_json to_json(const llm::CallRecord& c) {
    ordered_json j;
    j["index"] = c.index;
    j["kind"] = c.kind == llm::CallKind::chat ? "chat" : "embedding";
    j["tag"] = c.tag;
    j["model"] = c.model;
    j["prompt_tokens"] = c.prompt_tokens;
    j["completion_tokens"] = c.completion_tokens;
    j["embedding_tokens"] = c.embedding_tokens;
    j["approximate"] = c.approximate;
    return j;
}

llm::CallRecord call_record_from_json(const json& j) {
    llm::CallRecord c;
    c.index = field<std::uint64_t>(j, "index");
    const auto kind = field<std::string>(j, "kind");
    if (kind != "chat" && kind != "embedding") throw SchemaError("field-type", "unknown call kind '" + kind + "'");
    c.kind = kind == "chat" ? llm::CallKind::chat : llm::CallKind::embedding;
    c.tag = field<std::string>(j, "tag");
    c.model = field<std::string>(j, "model");
    c.prompt_tokens = field<std::int64_t>(j, "prompt_tokens");
    c.completion_tokens = field<std::int64_t>(j, "completion_tokens");
    c.embedding_tokens = field<std::int64_t>(j, "embedding_tokens");
    c.approximate = field<bool>(j, "approximate");
    return c;
}

game::GameOutcome outcome_from_ballots(const script::ScriptPack& pack, std::vector<game::Ballot> ballots) {
    game::GameOutcome o;
    o.murderer = pack.murderer().name;
    for (auto& b : ballots) (b.memoryless_round ? o.memoryless_ballots : o.ballots).push_back(std::move(b));
    const auto players = pack.player_names();
    if (o.ballots.empty()) throw SchemaError("missing-field", "run has no in-game ballots");
    o.in_game_winner = game::tally(o.ballots, o.murderer, players).winner;
    if (o.memoryless_ballots.empty()) {
        o.fraction_undefined = true;
    } else {
        const auto t = game::tally(o.memoryless_ballots, o.murderer, players);
        o.murderer_vote_fraction = t.murderer_vote_fraction;
        o.fraction_undefined = t.no_valid_ballots;
    }
    return o;
}

}  // namespace jubensha::store
