#pragma once

#include <json.hpp>

#include "jubensha/game/game.hpp"
#include "jubensha/llm/ledger.hpp"
#include "jubensha/memory/memory_store.hpp"

namespace jubensha::store {

nlohmann::ordered_json to_json(const game::GameConfig& c);
game::GameConfig game_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const game::TranscriptEvent& e);
game::TranscriptEvent transcript_event_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const game::Ballot& b);
game::Ballot ballot_from_json(const nlohmann::json& j);

// One line per record, tagged with the owning agent.
nlohmann::ordered_json to_json(const std::string& agent, const memory::MemoryRecord& r);

nlohmann::ordered_json to_json(const llm::CallRecord& c);
llm::CallRecord call_record_from_json(const nlohmann::json& j);

// Memoryless ballots are the ones with memoryless_round > 0.
game::GameOutcome outcome_from_ballots(const script::ScriptPack& pack, std::vector<game::Ballot> ballots);

}  // namespace jubensha::store
