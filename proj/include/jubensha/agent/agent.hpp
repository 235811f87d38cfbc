#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jubensha/agent/prompts.hpp"
#include "jubensha/agent/scoring.hpp"
#include "jubensha/agent/timeline.hpp"
#include "jubensha/llm/gateway.hpp"
#include "jubensha/llm/structured.hpp"
#include "jubensha/memory/memory_store.hpp"
#include "jubensha/script/script_pack.hpp"

namespace jubensha::agent {

// Every attempt of respond() failed at the gateway or parser.
class AgentPipelineError : public Error {
public:
    AgentPipelineError(std::string message, std::vector<std::string> attempt_errors)
        : Error(std::move(message)), attempt_errors_(std::move(attempt_errors)) {}
    const std::vector<std::string>& attempt_errors() const noexcept { return attempt_errors_; }

private:
    std::vector<std::string> attempt_errors_;
};

enum class Pipeline { no_mr, mr, mr_sr, mr_sr_sv };

// "NoMR", "MR", "MR+SR", "MR+SR+SV"
std::string to_string(Pipeline p);
Pipeline pipeline_from_string(std::string_view s);
// "MR+SR+SV(N=3)" for the verifying pipeline, to_string(p) otherwise.
std::string pipeline_label(Pipeline p, int sv_attempts);

constexpr bool uses_memory(Pipeline p) { return p != Pipeline::no_mr; }
constexpr bool uses_refinement(Pipeline p) { return p == Pipeline::mr_sr || p == Pipeline::mr_sr_sv; }
constexpr bool uses_verification(Pipeline p) { return p == Pipeline::mr_sr_sv; }

struct AgentConfig {
    Pipeline pipeline = Pipeline::mr_sr_sv;
    int sv_max_attempts = 3;
    VerificationPolicy host_policy = VerificationPolicy::host();
    VerificationPolicy player_policy = VerificationPolicy::player();
    LengthUnit length_unit = LengthUnit::auto_detect;
    std::size_t retrieval_k = memory::kDefaultRetrievalK;
    double temperature = 0.7;
    int max_output_tokens = 1024;
    std::uint64_t seed = 0;
};

struct FinalAnswer {
    std::string text;
    std::vector<AnswerCandidate> attempts;
    std::size_t chosen_index = 0;
    bool passed_threshold = false;
    // False when the pipeline skips verification; attempts then hold unverified text.
    bool verified = false;
    std::vector<std::string> attempt_errors;
};

struct AskResult {
    std::string target;
    std::string question;
};

struct VoteResult {
    std::optional<std::string> choice;
    std::string utterance;
    int calls = 0;
};

// Earliest candidate name in the utterance; the longer name wins at equal positions.
std::optional<std::string> match_candidate(std::string_view utterance, std::span<const std::string> candidates);

// Parses per-fact verdicts: exact key, then ordinal in the key, then position when the counts
// agree. Missing verdicts are false.
std::vector<bool> parse_verdicts(const llm::Entries& entries, const std::vector<std::string>& keys,
                                 std::size_t count);
bool verdict_is_true(std::string_view value);

class Agent {
public:
    Agent(const script::ScriptPack& pack, const script::CharacterScript& character, llm::Gateway& gateway,
          const PromptLibrary& prompts, Locale locale, AgentConfig config = {});

    const std::string& name() const noexcept { return character_->name; }
    const script::CharacterScript& character() const noexcept { return *character_; }
    const AgentConfig& config() const noexcept { return config_; }
    Locale locale() const noexcept { return locale_; }
    std::string host_name() const;

    std::string summary() const;
    std::string dialogue_line(std::string_view speaker, std::string_view addressee,
                              std::string_view utterance) const;
    std::string relationship_with(std::string_view interlocutor) const;
    const VerificationPolicy& policy_for(std::string_view inquirer) const;

    std::string generate_initial_answer(std::string_view question, std::string_view inquirer,
                                        const std::vector<memory::MemoryRecord>& memories,
                                        std::uint32_t variant = 0);
    std::vector<std::string> decompose_question(std::string_view question_dialogue);
    // Cached after the first successful call.
    const std::vector<TimelineFact>& timeline_facts();
    std::vector<bool> judge_fact_usefulness(std::string_view sub_question, std::span<const TimelineFact> facts);
    std::vector<bool> judge_fact_inclusion(std::string_view previous_answer, std::span<const TimelineFact> facts);
    std::string refine_answer(std::string_view question_dialogue, std::string_view initial_answer,
                              std::span<const TimelineFact> missing, std::uint32_t variant = 0);
    std::vector<TimelineFact> decompose_answer(std::string_view answer);
    std::vector<bool> verify_facts(std::span<const TimelineFact> facts);

    FinalAnswer respond(std::string_view question, std::string_view inquirer, const memory::MemoryStore& memory);

    AskResult ask_question(const memory::MemoryStore& memory, std::span<const std::string> other_players,
                           std::uint32_t round);
    std::string ask_follow_up(const memory::MemoryStore& memory, std::string_view respondent,
                              std::string_view respondent_answer);

    // memoryless replaces retrieval with transcript_context.
    VoteResult vote(const memory::MemoryStore& memory, std::span<const std::string> candidates,
                    std::string_view host_instruction, bool memoryless, std::string_view transcript_context,
                    std::uint32_t round);

private:
    Bindings base_bindings() const;
    std::string memories_text(const std::vector<memory::MemoryRecord>& memories) const;
    std::vector<memory::MemoryRecord> recall(const memory::MemoryStore& memory, std::string_view query) const;
    llm::ChatRequest request(std::string tag, std::string_view template_name, const Bindings& bindings,
                             std::vector<std::string> response_keys = {}, std::uint32_t variant = 0) const;
    std::string retry_instruction() const;
    std::vector<std::string> fact_keys(std::string_view key_name, std::size_t count) const;
    std::string fact_items(std::string_view item_template, const std::vector<std::string>& keys,
                           std::span<const TimelineFact> facts) const;
    std::vector<bool> judge(std::string tag, std::string_view template_name, std::string_view item_template,
                            std::string_view key_name, Bindings bindings, std::span<const TimelineFact> facts);
    std::string list_text(std::span<const std::string> names) const;
    // Usefulness verdicts depend only on the question, so attempts share them.
    AnswerCandidate run_attempt(std::string_view question, std::string_view question_dialogue,
                                std::string_view inquirer, const std::vector<memory::MemoryRecord>& memories,
                                std::uint32_t attempt, std::optional<std::vector<bool>>& useful);
    std::optional<std::string> resolve_target(std::string_view choice, std::span<const std::string> others) const;

    const script::ScriptPack* pack_;
    const script::CharacterScript* character_;
    llm::Gateway* gateway_;
    const PromptLibrary* prompts_;
    Locale locale_;
    AgentConfig config_;
    std::optional<std::vector<TimelineFact>> timeline_cache_;
};

}  // namespace jubensha::agent
