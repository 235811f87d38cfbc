#pragma once

#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jubensha/agent/agent.hpp"
#include "jubensha/llm/gateway.hpp"
#include "jubensha/memory/memory_store.hpp"
#include "jubensha/script/script_pack.hpp"

namespace jubensha::game {

enum class Stage { distribute, self_intro, initial_q, open_q_pre_clues, clue_reveal, open_q_post_clues, voting, outcome };
enum class EventKind { host, answer, question, clue, ballot, system };
enum class Winner { civilians, murderer };

std::string to_string(Stage s);
std::string to_string(EventKind k);
std::string to_string(Winner w);
Stage stage_from_string(std::string_view s);
EventKind event_kind_from_string(std::string_view s);
Winner winner_from_string(std::string_view s);

// How an answer event was produced.
struct AnswerMeta {
    std::int64_t attempts = 0;
    std::int64_t chosen_index = 0;
    bool passed_threshold = false;
    bool verified = false;
    double score = 0;
    std::int64_t length = 0;
    agent::LengthUnit length_unit = agent::LengthUnit::words;

    bool operator==(const AnswerMeta&) const = default;
};

struct TranscriptEvent {
    std::int64_t turn = 0;
    Stage stage = Stage::distribute;
    std::string speaker;
    std::string addressee;
    std::string utterance;
    EventKind kind = EventKind::system;
    // Open-questioning round (1-based) or memoryless voting round; 0 elsewhere.
    std::uint32_t round = 0;
    std::optional<AnswerMeta> answer;

    bool operator==(const TranscriptEvent&) const = default;
};

struct Ballot {
    std::string voter;
    std::optional<std::string> choice;
    // 0 for the in-game vote.
    std::uint32_t memoryless_round = 0;
    std::string utterance;

    bool operator==(const Ballot&) const = default;
};

struct Tally {
    std::map<std::string, std::int64_t> counts;
    std::int64_t valid = 0;
    std::int64_t invalid = 0;
    Winner winner = Winner::murderer;
    double murderer_vote_fraction = 0;
    bool no_valid_ballots = false;
};

// Civilians win only when the murderer's count strictly exceeds every other
// player's. Ballots naming someone outside `players` count as invalid.
Tally tally(std::span<const Ballot> ballots, std::string_view murderer, std::span<const std::string> players);

struct GameOutcome {
    std::string murderer;
    Winner in_game_winner = Winner::murderer;
    std::vector<Ballot> ballots;
    std::vector<Ballot> memoryless_ballots;
    // Over memoryless ballots; 0 with fraction_undefined set when none are valid.
    double murderer_vote_fraction = 0;
    bool fraction_undefined = false;

    bool operator==(const GameOutcome&) const = default;
};

class NoValidBallots : public Error {
public:
    using Error::Error;
};

double murderer_identification_accuracy(const GameOutcome& outcome, std::string_view murderer);

struct GameConfig {
    std::uint64_t seed = 0;
    agent::Pipeline pipeline = agent::Pipeline::mr_sr_sv;
    int sv_max_attempts = 3;
    int open_rounds_pre_clues = 2;
    int open_rounds_post_clues = 3;
    int memoryless_vote_count = 10;
    agent::Locale locale = agent::Locale::en;
    agent::LengthUnit length_unit = agent::LengthUnit::auto_detect;
    std::size_t retrieval_k = memory::kDefaultRetrievalK;
    double temperature = 0.7;

    void validate() const;
    agent::AgentConfig agent_config() const;
    bool operator==(const GameConfig&) const = default;
};

struct GameResult {
    std::vector<TranscriptEvent> transcript;
    GameOutcome outcome;
    std::vector<memory::MemoryStore> memories;
};

// Raised when a stage cannot finish; carries everything recorded so far.
class StageError : public Error {
public:
    StageError(Stage stage, std::vector<TranscriptEvent> partial, std::exception_ptr cause, const std::string& what);
    Stage stage() const noexcept { return stage_; }
    const std::vector<TranscriptEvent>& partial_transcript() const noexcept { return partial_; }
    std::exception_ptr cause() const noexcept { return cause_; }

private:
    Stage stage_;
    std::vector<TranscriptEvent> partial_;
    std::exception_ptr cause_;
};

GameResult run_game(const script::ScriptPack& pack, const GameConfig& config, llm::Gateway& gateway,
                    const agent::PromptLibrary& prompts);

// Public dialogue as memory lines, one per event, in turn order.
std::string transcript_text(std::span<const TranscriptEvent> events, const agent::PromptLibrary& prompts,
                            agent::Locale locale);

}  // namespace jubensha::game
