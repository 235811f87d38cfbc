#include "jubensha/eval/evaluator.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "jubensha/errors.hpp"
#include "jubensha/llm/structured.hpp"
#include "jubensha/text.hpp"

namespace jubensha::eval {

std::string to_string(Access a) { return a == Access::pipeline ? "pipeline" : "full_script_access"; }

Access access_from_string(std::string_view s) {
    if (s == "pipeline") return Access::pipeline;
    if (s == "full_script_access" || s == "fsa" || s == "FSA") return Access::full_script_access;
    throw PreconditionError("unknown access mode '" + std::string(s) + "'");
}

namespace {

std::optional<std::string> member(const nlohmann::ordered_json& obj, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        auto it = obj.find(n);
        if (it != obj.end() && !it->is_null()) {
            std::string v = text::trim_copy(llm::json_value_to_text(*it));
            if (!v.empty()) return v;
        }
    }
    return std::nullopt;
}

nlohmann::ordered_json parse_item_array(std::string_view reply) {
    const std::string body = llm::first_fenced_block(reply).value_or(std::string(reply));
    const auto start = body.find_first_of("[{");
    if (start == std::string::npos) throw llm::ParseError("no list in reply");
    nlohmann::ordered_json j = llm::parse_jsonish(std::string_view(body).substr(start));
    if (j.is_object()) {
        for (auto& [k, v] : j.items()) {
            if (v.is_array()) return v;
        }
        nlohmann::ordered_json wrapped = nlohmann::ordered_json::array();
        wrapped.push_back(j);
        return wrapped;
    }
    if (!j.is_array()) throw llm::ParseError("reply is not a list of questions");
    return j;
}

std::optional<Verdict> read_verdict(std::string_view value) {
    const std::string v = text::to_lower_ascii(text::trim(value));
    for (std::string_view neg : {"incorrect", "wrong", "错误", "不正确", "不对", "错"}) {
        if (text::contains(v, neg)) return Verdict::incorrect;
    }
    for (std::string_view pos : {"correct", "right", "正确", "对"}) {
        if (text::contains(v, pos)) return Verdict::correct;
    }
    return std::nullopt;
}

std::optional<int> read_score(std::string_view value) {
    for (char c : value) {
        if (c >= '1' && c <= '5') return c - '0';
        if (c >= '0' && c <= '9') return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

Evaluator::Evaluator(llm::Gateway& answer_gateway, llm::Gateway& judge_gateway, const agent::PromptLibrary& prompts,
                     EvalOptions options)
    : answer_gateway_(&answer_gateway), judge_gateway_(&judge_gateway), prompts_(&prompts),
      options_(std::move(options)) {
    if (options_.factual_batch_size == 0) throw PreconditionError("factual_batch_size must be positive");
    if (options_.judge_model.empty()) options_.judge_model = judge_gateway.chat_model();
}

llm::ChatRequest Evaluator::request(std::string tag, const agent::Bindings& bindings, std::vector<std::string> keys,
                                    double temperature, std::uint32_t variant) const {
    llm::ChatRequest r;
    r.user_text = prompts_->render(options_.locale, tag, bindings);
    r.tag = std::move(tag);
    r.temperature = temperature;
    r.max_output_tokens = options_.max_output_tokens;
    r.bindings = bindings;
    r.bindings["locale"] = agent::to_string(options_.locale);
    r.response_keys = std::move(keys);
    r.variant = variant;
    return r;
}

std::string Evaluator::retry_instruction() const { return prompts_->raw(options_.locale, "structured_retry"); }

std::vector<QAItem> Evaluator::generate_section(const script::CharacterScript& character, QAKind kind, int count,
                                                std::string_view game) {
    const bool story = kind == QAKind::factual_story;
    agent::Bindings b{{"character_name", character.name},
                      {"question_count", std::to_string(count)},
                      {"character_story", character.story},
                      {"character_timeline", character.timeline_text}};
    const std::string tag = story ? "qa_gen_story" : "qa_gen_timeline";
    nlohmann::ordered_json list;
    bool parsed = false;
    for (std::uint32_t attempt = 0; attempt < 2 && !parsed; ++attempt) {
        auto req = request(tag, b, {}, options_.answer_temperature, attempt);
        if (attempt) req.user_text += "\n" + retry_instruction();
        const auto resp = answer_gateway_->chat(req);
        try {
            list = parse_item_array(resp.text);
            parsed = true;
        } catch (const llm::ParseError& e) {
            spdlog::warn("{} for {}: unparsable reply ({})", tag, character.name, e.what());
        }
    }
    if (!parsed) {
        spdlog::warn("{} for {}: skipped after retry", tag, character.name);
        return {};
    }
    std::vector<QAItem> out;
    std::size_t dropped = 0;
    for (const auto& entry : list) {
        if (static_cast<int>(out.size()) == count) break;
        if (!entry.is_object()) {
            ++dropped;
            continue;
        }
        auto q = member(entry, {"question", "问题"});
        auto a = member(entry, {"answer", "答案"});
        auto s = member(entry, {"source", "original_text", "原文", "出处"});
        if (!q || !a || !s) {
            ++dropped;
            continue;
        }
        QAItem item;
        item.game = std::string(game);
        item.kind = kind;
        item.question = *q;
        item.reference_answer = *a;
        item.source_quote = *s;
        item.owner_character = character.name;
        item.id = (game.empty() ? std::string() : std::string(game) + "/") + character.name + "/" +
                  (story ? "story/" : "timeline/") + std::to_string(out.size());
        out.push_back(std::move(item));
    }
    if (dropped) spdlog::warn("{} for {}: dropped {} items without question, answer or source", tag, character.name, dropped);
    return out;
}

std::vector<QAItem> Evaluator::generate_factual_questions(const script::CharacterScript& character, int per_section,
                                                          std::string_view game) {
    if (per_section < 0) throw PreconditionError("per_section must be non-negative");
    if (text::trim(character.story).empty() || text::trim(character.timeline_text).empty()) {
        throw PreconditionError("character '" + character.name + "' needs a story and a timeline");
    }
    if (per_section == 0) return {};
    auto out = generate_section(character, QAKind::factual_story, per_section, game);
    auto timeline = generate_section(character, QAKind::factual_timeline, per_section, game);
    out.insert(out.end(), std::make_move_iterator(timeline.begin()), std::make_move_iterator(timeline.end()));
    return out;
}

std::string Evaluator::observed(const Answerer& answerer, std::string_view query) const {
    const auto* mem = answerer.memory;
    if (!agent::uses_memory(answerer.pipeline) || !mem || mem->empty() || text::trim(query).empty()) {
        return prompts_->key(options_.locale, "no_memories");
    }
    std::vector<std::string> lines;
    for (const auto& r : mem->retrieve(*answer_gateway_, query, options_.retrieval_k)) lines.push_back(r.text);
    return text::join(lines, "\n");
}

std::string Evaluator::all_scripts(const script::ScriptPack& pack) const {
    std::vector<std::string> blocks;
    for (const auto& c : pack.characters) blocks.push_back(c.name + ":\n" + c.story + "\n" + c.timeline_text);
    return text::join(blocks, "\n\n");
}

agent::Bindings Evaluator::answerer_bindings(const Answerer& answerer) const {
    if (!answerer.pack || !answerer.character) throw PreconditionError("answerer needs a pack and a character");
    return {{"background_story", answerer.pack->background_story},
            {"character_story", answerer.character->story},
            {"character_timeline", answerer.character->timeline_text},
            {"agent_name", answerer.character->name}};
}

std::vector<std::string> Evaluator::answer_batch(const Answerer& answerer, std::span<const QAItem> batch,
                                                 std::uint32_t variant) {
    agent::Bindings b = answerer_bindings(answerer);
    std::vector<std::string> keys;
    std::vector<std::string> questions;
    std::vector<std::string> item_lines;
    std::vector<std::string> query;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::string idx = std::to_string(i);
        keys.push_back(prompts_->render_key(options_.locale, "qa_answer", {{"index", idx}}));
        questions.push_back(prompts_->render(options_.locale, "qa_answer_question",
                                             {{"index", idx}, {"question", batch[i].question}}));
        item_lines.push_back(prompts_->render(options_.locale, "qa_answer_item", {{"key", keys.back()}, {"index", idx}}));
        query.push_back(batch[i].question);
    }
    b["relevant_memories"] = observed(answerer, text::join(query, "\n"));
    b["questions"] = text::join(questions, "\n");
    b["question_list"] = text::join(query, "\n");
    b["items"] = text::join(item_lines, ",\n");
    const auto reply = llm::chat_structured(*answer_gateway_, request("qa_answer", b, keys, options_.answer_temperature, variant),
                                            keys, retry_instruction());
    std::vector<std::string> out;
    for (const auto& k : keys) out.push_back(text::trim_copy(*llm::find_entry(reply.entries, k)));
    return out;
}

std::vector<std::pair<QAItem, std::string>> Evaluator::answer_factual(const Answerer& answerer,
                                                                      std::span<const QAItem> items) {
    if (items.empty()) throw PreconditionError("answer_factual needs at least one item");
    std::vector<std::pair<QAItem, std::string>> out;
    const std::size_t n = options_.factual_batch_size;
    for (std::size_t start = 0; start < items.size(); start += n) {
        const auto batch = items.subspan(start, std::min(n, items.size() - start));
        std::vector<std::string> answers;
        try {
            answers = answer_batch(answerer, batch, 0);
        } catch (const llm::ParseError& e) {
            spdlog::warn("factual batch at {} for {} unparsable ({}), answering one by one", start, answerer.name(),
                         e.what());
            for (const auto& item : batch) {
                try {
                    answers.push_back(answer_batch(answerer, std::span<const QAItem>(&item, 1), 0).front());
                } catch (const llm::ParseError& e2) {
                    spdlog::warn("factual item {} unanswered ({})", item.id, e2.what());
                    answers.emplace_back();
                }
            }
        }
        for (std::size_t i = 0; i < batch.size(); ++i) out.emplace_back(batch[i], answers[i]);
    }
    return out;
}

FactualVerdict Evaluator::judge_factual(const QAItem& item, std::string_view answer_text) {
    if (text::trim(answer_text).empty()) return {Verdict::incorrect, false};
    const std::string key = prompts_->key(options_.locale, "qa_judge");
    agent::Bindings b{{"question", item.question},
                      {"answer", item.reference_answer},
                      {"reply", std::string(answer_text)},
                      {"key", key}};
    try {
        const auto reply = llm::chat_structured(*judge_gateway_, request("qa_judge", b, {key}, options_.judge_temperature),
                                                {key}, retry_instruction());
        if (auto v = read_verdict(*llm::find_entry(reply.entries, key))) return {*v, false};
    } catch (const llm::ParseError& e) {
        spdlog::warn("judge reply for {} unparsable ({})", item.id, e.what());
    }
    return {Verdict::incorrect, true};
}

std::vector<JudgedAnswer> Evaluator::evaluate_factual(const Answerer& answerer, std::span<const QAItem> items) {
    const std::string murderer = answerer.pack->murderer().name;
    std::vector<JudgedAnswer> out;
    for (auto& [item, answer] : answer_factual(answerer, items)) {
        JudgedAnswer j;
        j.item_id = item.id;
        j.answerer = answerer.name();
        j.kind = item.kind;
        j.question_class = question_class(item, answerer.name(), murderer);
        const auto v = judge_factual(item, answer);
        j.answer_text = std::move(answer);
        j.verdict = v.verdict;
        j.judge_parse_failed = v.parse_failed;
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<JudgedAnswer> Evaluator::evaluate_inferential(const Answerer& answerer, std::span<const QAItem> items,
                                                          Access access) {
    for (const auto& item : items) {
        if (item.kind != QAKind::inferential) throw PreconditionError("item " + item.id + " is not inferential");
    }
    const agent::Bindings base = answerer_bindings(answerer);
    const std::string qid = "0";
    std::vector<JudgedAnswer> out;
    for (const auto& item : items) {
        JudgedAnswer j;
        j.item_id = item.id;
        j.answerer = answerer.name();
        j.kind = QAKind::inferential;

        agent::Bindings b = base;
        b["relevant_memories"] =
            access == Access::full_script_access ? all_scripts(*answerer.pack) : observed(answerer, item.question);
        b["question"] = item.question;
        const std::string answer_key = prompts_->key(options_.locale, "inf_answer");
        b["key"] = answer_key;
        try {
            const auto reply = llm::chat_structured(
                *answer_gateway_, request("inf_answer", b, {answer_key}, options_.answer_temperature), {answer_key},
                retry_instruction());
            j.answer_text = text::trim_copy(*llm::find_entry(reply.entries, answer_key));
        } catch (const llm::ParseError& e) {
            spdlog::warn("inferential answer for {} unparsable ({})", item.id, e.what());
        }

        if (!j.answer_text.empty()) {
            const std::string key = prompts_->render_key(options_.locale, "inf_judge", {{"question_id", qid}});
            agent::Bindings jb{{"eval_instruction",
                                prompts_->raw(options_.locale, item.choice == ChoiceMode::single ? "eval_single" : "eval_multi")},
                               {"question_id", qid},
                               {"question", item.question},
                               {"answer", item.reference_answer},
                               {"reply", j.answer_text},
                               {"key", key}};
            try {
                const auto reply = llm::chat_structured(
                    *judge_gateway_, request("inf_judge", jb, {key}, options_.judge_temperature), {key},
                    retry_instruction());
                if (auto v = read_verdict(*llm::find_entry(reply.entries, key))) {
                    j.verdict = *v;
                } else {
                    j.judge_parse_failed = true;
                }
            } catch (const llm::ParseError& e) {
                spdlog::warn("inferential judge reply for {} unparsable ({})", item.id, e.what());
                j.judge_parse_failed = true;
            }
        }

        b["previous_reply"] = item.reference_answer;
        const std::string rkey = prompts_->key(options_.locale, "rationale_predict");
        b["key"] = rkey;
        try {
            const auto reply = llm::chat_structured(
                *answer_gateway_, request("rationale_predict", b, {rkey}, options_.answer_temperature), {rkey},
                retry_instruction());
            j.rationale_text = text::trim_copy(*llm::find_entry(reply.entries, rkey));
        } catch (const llm::ParseError& e) {
            spdlog::warn("rationale for {} unparsable ({})", item.id, e.what());
        }

        if (j.rationale_text && !j.rationale_text->empty()) {
            const std::string skey = prompts_->render_key(options_.locale, "rationale_judge", {{"question_id", qid}});
            agent::Bindings sb{{"question_id", qid},
                               {"question", item.question},
                               {"answer", item.reference_answer},
                               {"ground_truth_rationale", item.reference_rationale},
                               {"player_rationale", *j.rationale_text},
                               {"key", skey}};
            try {
                const auto reply = llm::chat_structured(
                    *judge_gateway_, request("rationale_judge", sb, {skey}, options_.judge_temperature), {skey},
                    retry_instruction());
                j.rationale_score = read_score(*llm::find_entry(reply.entries, skey));
                if (!j.rationale_score) j.judge_parse_failed = true;
            } catch (const llm::ParseError& e) {
                spdlog::warn("rationale score for {} unparsable ({})", item.id, e.what());
                j.judge_parse_failed = true;
            }
        } else {
            j.rationale_score = 1;
        }
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace jubensha::eval
