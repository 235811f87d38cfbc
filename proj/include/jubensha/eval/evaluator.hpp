#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jubensha/agent/agent.hpp"
#include "jubensha/agent/prompts.hpp"
#include "jubensha/eval/qa.hpp"
#include "jubensha/llm/gateway.hpp"
#include "jubensha/memory/memory_store.hpp"
#include "jubensha/script/script_pack.hpp"

namespace jubensha::eval {

enum class Access { pipeline, full_script_access };

std::string to_string(Access a);
Access access_from_string(std::string_view s);

// The agent under evaluation: its script plus what it observed during the game.
struct Answerer {
    const script::ScriptPack* pack = nullptr;
    const script::CharacterScript* character = nullptr;
    // Null or empty means nothing was observed.
    const memory::MemoryStore* memory = nullptr;
    agent::Pipeline pipeline = agent::Pipeline::mr_sr_sv;

    const std::string& name() const { return character->name; }
};

struct EvalOptions {
    agent::Locale locale = agent::Locale::en;
    std::size_t retrieval_k = memory::kDefaultRetrievalK;
    std::size_t factual_batch_size = 10;
    double answer_temperature = 0.7;
    double judge_temperature = 0.0;
    int max_output_tokens = 2048;
    // Recorded in reports; defaults to the judge gateway's chat model.
    std::string judge_model;
};

struct FactualVerdict {
    Verdict verdict = Verdict::incorrect;
    bool parse_failed = false;
};

class Evaluator {
public:
    Evaluator(llm::Gateway& answer_gateway, llm::Gateway& judge_gateway, const agent::PromptLibrary& prompts,
              EvalOptions options = {});

    const std::string& judge_model() const noexcept { return options_.judge_model; }
    const EvalOptions& options() const noexcept { return options_; }

    std::vector<QAItem> generate_factual_questions(const script::CharacterScript& character, int per_section = 20,
                                                   std::string_view game = "");

    // Answers are order-aligned with items.
    std::vector<std::pair<QAItem, std::string>> answer_factual(const Answerer& answerer,
                                                               std::span<const QAItem> items);
    FactualVerdict judge_factual(const QAItem& item, std::string_view answer_text);

    // answer_factual followed by judge_factual, with the question class filled in.
    std::vector<JudgedAnswer> evaluate_factual(const Answerer& answerer, std::span<const QAItem> items);

    std::vector<JudgedAnswer> evaluate_inferential(const Answerer& answerer, std::span<const QAItem> items,
                                                   Access access = Access::pipeline);

private:
    std::vector<QAItem> generate_section(const script::CharacterScript& character, QAKind kind, int count,
                                         std::string_view game);
    std::vector<std::string> answer_batch(const Answerer& answerer, std::span<const QAItem> batch,
                                          std::uint32_t variant);
    std::string observed(const Answerer& answerer, std::string_view query) const;
    std::string all_scripts(const script::ScriptPack& pack) const;
    agent::Bindings answerer_bindings(const Answerer& answerer) const;
    llm::ChatRequest request(std::string tag, const agent::Bindings& bindings, std::vector<std::string> keys,
                             double temperature, std::uint32_t variant = 0) const;
    std::string retry_instruction() const;

    llm::Gateway* answer_gateway_;
    llm::Gateway* judge_gateway_;
    const agent::PromptLibrary* prompts_;
    EvalOptions options_;
};

}  // namespace jubensha::eval
