#include "jubensha/agent/agent.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "jubensha/text.hpp"

namespace jubensha::agent {

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::no_mr: return "NoMR";
        case Pipeline::mr: return "MR";
        case Pipeline::mr_sr: return "MR+SR";
        case Pipeline::mr_sr_sv: return "MR+SR+SV";
    }
    return "MR+SR+SV";
}

Pipeline pipeline_from_string(std::string_view s) {
    const std::string l = text::to_lower_ascii(s);
    if (l == "nomr" || l == "no_mr") return Pipeline::no_mr;
    if (l == "mr") return Pipeline::mr;
    if (l == "mr+sr" || l == "mr_sr") return Pipeline::mr_sr;
    if (l == "mr+sr+sv" || l == "mr_sr_sv") return Pipeline::mr_sr_sv;
    throw PreconditionError("unknown pipeline '" + std::string(s) + "', expected NoMR, MR, MR+SR or MR+SR+SV");
}

std::string pipeline_label(Pipeline p, int sv_attempts) {
    if (!uses_verification(p)) return to_string(p);
    return to_string(p) + "(N=" + std::to_string(sv_attempts) + ")";
}

std::optional<std::string> match_candidate(std::string_view utterance, std::span<const std::string> candidates) {
    const std::string hay = text::to_lower_ascii(utterance);
    std::optional<std::string> best;
    std::size_t best_pos = std::string::npos;
    for (const auto& c : candidates) {
        if (c.empty()) continue;
        const std::size_t pos = hay.find(text::to_lower_ascii(c));
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && c.size() > best->size())) {
            best = c;
            best_pos = pos;
        }
    }
    return best;
}

bool verdict_is_true(std::string_view value) {
    const std::string v = text::to_lower_ascii(text::trim(value));
    for (std::string_view neg : {"incorrect", "false", "wrong", "错误", "不", "否"}) {
        if (text::contains(v, neg)) return false;
    }
    if (text::starts_with(v, "no")) return false;
    for (std::string_view pos : {"true", "correct", "yes", "正确", "是", "包含", "可以"}) {
        if (text::contains(v, pos)) return true;
    }
    return false;
}

namespace {

// Index named by a per-fact key: "3rd", "第3个", or a lone number.
std::optional<std::size_t> key_index(std::string_view key) {
    const std::string k = text::to_lower_ascii(key);
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < k.size();) {
        if (k[i] >= '0' && k[i] <= '9') {
            std::size_t j = i;
            while (j < k.size() && k[j] >= '0' && k[j] <= '9') ++j;
            runs.emplace_back(i, j);
            i = j;
        } else {
            ++i;
        }
    }
    for (auto [b, e] : runs) {
        const std::string_view rest = std::string_view(k).substr(e);
        const bool ordinal = text::starts_with(rest, "st") || text::starts_with(rest, "nd") ||
                             text::starts_with(rest, "rd") || text::starts_with(rest, "th") ||
                             (b >= 3 && k.compare(b - 3, 3, "第") == 0);
        if (ordinal) return std::stoul(k.substr(b, e - b));
    }
    if (runs.size() == 1) return std::stoul(k.substr(runs[0].first, runs[0].second - runs[0].first));
    return std::nullopt;
}

std::int64_t stable_hash(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x7a3f;
    for (auto p : parts) h = text::hash_combine(h, p);
    return static_cast<std::int64_t>(h >> 1);
}

std::optional<std::size_t> option_letter(std::string_view utterance, std::size_t count) {
    const std::u32string s = text::decode_utf8(utterance);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const char32_t c = s[i];
        if (c < U'A' || c > U'Z') continue;
        if (i > 0 && ((s[i - 1] >= U'A' && s[i - 1] <= U'Z') || (s[i - 1] >= U'a' && s[i - 1] <= U'z'))) continue;
        if (s[i + 1] != U'.' && s[i + 1] != U'．' && s[i + 1] != U'、') continue;
        const std::size_t idx = c - U'A';
        if (idx < count) return idx;
    }
    return std::nullopt;
}

}  // namespace

std::vector<bool> parse_verdicts(const llm::Entries& entries, const std::vector<std::string>& keys,
                                 std::size_t count) {
    std::vector<bool> verdicts(count, false);
    std::vector<bool> found(count, false);
    for (std::size_t i = 0; i < count && i < keys.size(); ++i) {
        if (auto v = llm::find_entry(entries, keys[i])) {
            verdicts[i] = verdict_is_true(*v);
            found[i] = true;
        }
    }
    for (const auto& [key, value] : entries) {
        auto idx = key_index(key);
        if (!idx || *idx >= count || found[*idx]) continue;
        verdicts[*idx] = verdict_is_true(value);
        found[*idx] = true;
    }
    const auto matched = static_cast<std::size_t>(std::count(found.begin(), found.end(), true));
    if (matched == 0 && entries.size() == count) {
        for (std::size_t i = 0; i < count; ++i) verdicts[i] = verdict_is_true(entries[i].second);
        return verdicts;
    }
    if (matched < count) spdlog::warn("{} of {} verdicts missing, treated as false", count - matched, count);
    return verdicts;
}

Agent::Agent(const script::ScriptPack& pack, const script::CharacterScript& character, llm::Gateway& gateway,
             const PromptLibrary& prompts, Locale locale, AgentConfig config)
    : pack_(&pack), character_(&character), gateway_(&gateway), prompts_(&prompts), locale_(locale),
      config_(config) {
    config_.host_policy.validate();
    config_.player_policy.validate();
    if (config_.sv_max_attempts < 1) throw PreconditionError("sv_max_attempts must be at least 1");
    if (config_.retrieval_k == 0) throw PreconditionError("retrieval_k must be positive");
}

std::string Agent::host_name() const { return prompts_->key(locale_, "host_name"); }

std::string Agent::summary() const {
    const auto& c = *character_;
    return prompts_->render(locale_, "agent_summary",
                            {{"name", c.name},
                             {"age", std::to_string(c.age)},
                             {"role_label", prompts_->key(locale_, c.role == script::Role::murderer
                                                                      ? "role_murderer"
                                                                      : "role_civilian")},
                             {"mission", c.mission},
                             {"story", c.story},
                             {"timeline", c.timeline_text}});
}

std::string Agent::dialogue_line(std::string_view speaker, std::string_view addressee,
                                 std::string_view utterance) const {
    return prompts_->render(locale_, "memory_line",
                            {{"speaker", std::string(speaker)},
                             {"addressee", std::string(addressee)},
                             {"utterance", std::string(utterance)}});
}

std::string Agent::relationship_with(std::string_view interlocutor) const {
    if (interlocutor == host_name()) return prompts_->raw(locale_, "relationship_host");
    if (auto it = character_->relationships.find(std::string(interlocutor));
        it != character_->relationships.end()) {
        return it->second;
    }
    return prompts_->render(locale_, "relationship_unknown", {{"interlocutor", std::string(interlocutor)}});
}

const VerificationPolicy& Agent::policy_for(std::string_view inquirer) const {
    return inquirer == host_name() ? config_.host_policy : config_.player_policy;
}

std::string Agent::list_text(std::span<const std::string> names) const {
    return text::join(std::vector<std::string>(names.begin(), names.end()), locale_ == Locale::zh ? "，" : ", ");
}

Bindings Agent::base_bindings() const {
    const auto names = pack_->player_names();
    return {{"agent_name", character_->name},
            {"agent_summary", summary()},
            {"game_rule", pack_->game_rules_text},
            {"background_story", pack_->background_story},
            {"players", list_text(names)},
            {"num_of_players", std::to_string(names.size())},
            {"victim", pack_->victim_name},
            {"agent_timeline", character_->timeline_text},
            {"agent_story", character_->story},
            {"role", script::to_string(character_->role)},
            {"locale", to_string(locale_)}};
}

std::string Agent::memories_text(const std::vector<memory::MemoryRecord>& memories) const {
    if (memories.empty()) return prompts_->key(locale_, "no_memories");
    std::vector<std::string> lines;
    for (const auto& m : memories) lines.push_back(m.text);
    return text::join(lines, "\n");
}

std::vector<memory::MemoryRecord> Agent::recall(const memory::MemoryStore& memory, std::string_view query) const {
    if (!uses_memory(config_.pipeline) || memory.empty() || text::trim(query).empty()) return {};
    return memory.retrieve(*gateway_, query, config_.retrieval_k);
}

llm::ChatRequest Agent::request(std::string tag, std::string_view template_name, const Bindings& bindings,
                                std::vector<std::string> response_keys, std::uint32_t variant) const {
    llm::ChatRequest r;
    r.user_text = prompts_->render(locale_, template_name, bindings);
    r.tag = std::move(tag);
    r.temperature = config_.temperature;
    r.max_output_tokens = config_.max_output_tokens;
    r.bindings = bindings;
    r.response_keys = std::move(response_keys);
    r.variant = variant;
    return r;
}

std::string Agent::retry_instruction() const { return prompts_->raw(locale_, "structured_retry"); }

std::vector<std::string> Agent::fact_keys(std::string_view key_name, std::size_t count) const {
    std::vector<std::string> keys;
    keys.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        keys.push_back(prompts_->render_key(locale_, key_name, {{"n", std::to_string(i)}, {"ordinal", ordinal_en(i)}}));
    }
    return keys;
}

std::string Agent::fact_items(std::string_view item_template, const std::vector<std::string>& keys,
                              std::span<const TimelineFact> facts) const {
    std::vector<std::string> items;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        items.push_back(prompts_->render(locale_, item_template, {{"key", keys[i]}, {"fact", facts[i].text}}));
    }
    return text::join(items, "\n");
}

std::vector<bool> Agent::judge(std::string tag, std::string_view template_name, std::string_view item_template,
                               std::string_view key_name, Bindings bindings, std::span<const TimelineFact> facts) {
    const auto keys = fact_keys(key_name, facts.size());
    bindings["items"] = fact_items(item_template, keys, facts);
    std::vector<std::string> lines;
    for (const auto& f : facts) lines.push_back(f.text);
    bindings["fact_lines"] = text::join(lines, "\n");
    auto req = request(std::move(tag), template_name, bindings, keys);
    try {
        const auto reply = llm::chat_structured(*gateway_, std::move(req), {}, retry_instruction());
        return parse_verdicts(reply.entries, keys, facts.size());
    } catch (const llm::ParseError& e) {
        spdlog::warn("{}: judge output unusable ({}), all {} verdicts false", name(), e.what(), facts.size());
        return std::vector<bool>(facts.size(), false);
    }
}

std::string Agent::generate_initial_answer(std::string_view question, std::string_view inquirer,
                                           const std::vector<memory::MemoryRecord>& memories,
                                           std::uint32_t variant) {
    if (text::trim(question).empty()) throw PreconditionError("question is empty");
    Bindings b = base_bindings();
    b["current_dialogue"] = dialogue_line(inquirer, name(), question);
    b["relevant_memories"] = memories_text(memories);
    b["relationship_with_interlocutor"] = relationship_with(inquirer);
    b["inquirer"] = std::string(inquirer);
    b["question"] = std::string(question);
    b["answer_tag"] = prompts_->key(locale_, "answer_tag");
    const auto resp = gateway_->chat(request("answer", "answer", b, {}, variant));
    auto answer = llm::extract_tagged_answer(resp.text, prompts_->key(locale_, "answer_tag"));
    if (answer.text.empty()) throw llm::ParseError("empty answer from " + name());
    return answer.text;
}

std::vector<std::string> Agent::decompose_question(std::string_view question_dialogue) {
    if (text::trim(question_dialogue).empty()) throw PreconditionError("question is empty");
    Bindings b = base_bindings();
    b["question"] = std::string(question_dialogue);
    const auto resp = gateway_->chat(request("decompose_question", "decompose_question", b));
    auto parts = llm::parse_item_list(resp.text);
    if (parts.empty()) {
        spdlog::info("{}: question decomposition came back empty, using the whole question", name());
        return {std::string(text::trim(question_dialogue))};
    }
    return parts;
}

const std::vector<TimelineFact>& Agent::timeline_facts() {
    if (timeline_cache_) return *timeline_cache_;
    if (text::trim(character_->timeline_text).empty()) throw PreconditionError(name() + " has an empty timeline");
    const auto resp = gateway_->chat(request("extract_timeline", "extract_timeline", base_bindings()));
    auto facts = make_facts(llm::parse_item_list(resp.text));
    if (facts.empty()) {
        spdlog::warn("{}: timeline extraction returned nothing, splitting the script timeline", name());
        facts = make_facts(text::split_sentences(character_->timeline_text));
    }
    timeline_cache_ = std::move(facts);
    return *timeline_cache_;
}

std::vector<bool> Agent::judge_fact_usefulness(std::string_view sub_question, std::span<const TimelineFact> facts) {
    if (facts.empty()) throw PreconditionError("no facts to judge");
    Bindings b = base_bindings();
    b["sub_question"] = std::string(sub_question);
    return judge("judge_useful", "judge_useful", "judge_useful_item", "judge_useful", std::move(b), facts);
}

std::vector<bool> Agent::judge_fact_inclusion(std::string_view previous_answer, std::span<const TimelineFact> facts) {
    if (facts.empty()) throw PreconditionError("no facts to judge");
    Bindings b = base_bindings();
    b["previous_answer"] = std::string(previous_answer);
    return judge("judge_included", "judge_included", "judge_included_item", "judge_included", std::move(b), facts);
}

std::string Agent::refine_answer(std::string_view question_dialogue, std::string_view initial_answer,
                                 std::span<const TimelineFact> missing, std::uint32_t variant) {
    if (missing.empty()) throw PreconditionError("refinement needs at least one missing fact");
    std::vector<std::string> lines;
    for (const auto& f : missing) lines.push_back(f.text);
    Bindings b = base_bindings();
    b["question_dialogue"] = std::string(question_dialogue);
    b["previous_answer"] = std::string(initial_answer);
    b["missing_info"] = text::join(lines, locale_ == Locale::zh ? "；" : "; ");
    b["fact_lines"] = text::join(lines, "\n");
    const std::string key = prompts_->key(locale_, "refine");
    b["key"] = key;
    try {
        const auto reply =
            llm::chat_structured(*gateway_, request("refine", "refine", b, {key}, variant), {key}, retry_instruction());
        std::string refined = text::trim_copy(*llm::find_entry(reply.entries, key));
        if (!refined.empty()) return refined;
    } catch (const llm::ParseError& e) {
        spdlog::warn("{}: refinement output unusable ({}), keeping the initial answer", name(), e.what());
    }
    return std::string(initial_answer);
}

std::vector<TimelineFact> Agent::decompose_answer(std::string_view answer) {
    if (text::trim(answer).empty()) throw PreconditionError("answer is empty");
    Bindings b = base_bindings();
    b["statement"] = std::string(answer);
    const auto resp = gateway_->chat(request("decompose_answer", "decompose_answer", b));
    return make_facts(llm::parse_item_list(resp.text));
}

std::vector<bool> Agent::verify_facts(std::span<const TimelineFact> facts) {
    if (facts.empty()) return {};
    return judge("verify", "verify", "verify_item", "verify", base_bindings(), facts);
}

AnswerCandidate Agent::run_attempt(std::string_view question, std::string_view question_dialogue,
                                   std::string_view inquirer, const std::vector<memory::MemoryRecord>& memories,
                                   std::uint32_t attempt, std::optional<std::vector<bool>>& useful) {
    std::string text = generate_initial_answer(question, inquirer, memories, attempt);
    if (uses_refinement(config_.pipeline)) {
        const auto& facts = timeline_facts();
        if (!useful && !facts.empty()) {
            std::vector<bool> any(facts.size(), false);
            for (const auto& sub : decompose_question(question_dialogue)) {
                const auto v = judge_fact_usefulness(sub, facts);
                for (std::size_t i = 0; i < any.size(); ++i) any[i] = any[i] || v[i];
            }
            useful = std::move(any);
        }
        std::vector<TimelineFact> relevant;
        for (std::size_t i = 0; useful && i < facts.size(); ++i) {
            if ((*useful)[i]) relevant.push_back(facts[i]);
        }
        if (!relevant.empty()) {
            const auto included = judge_fact_inclusion(text, relevant);
            std::vector<TimelineFact> missing;
            for (std::size_t i = 0; i < relevant.size(); ++i) {
                if (!included[i]) missing.push_back(relevant[i]);
            }
            if (!missing.empty()) text = refine_answer(question_dialogue, text, missing, attempt);
        }
    }
    if (!uses_verification(config_.pipeline)) return build_candidate(std::move(text), {}, {}, config_.length_unit);
    auto facts = decompose_answer(text);
    auto verdicts = verify_facts(facts);
    return build_candidate(std::move(text), std::move(facts), std::move(verdicts), config_.length_unit);
}

FinalAnswer Agent::respond(std::string_view question, std::string_view inquirer, const memory::MemoryStore& memory) {
    if (text::trim(question).empty()) throw PreconditionError("question is empty");
    VerificationPolicy policy = policy_for(inquirer);
    policy.max_attempts = uses_verification(config_.pipeline) ? config_.sv_max_attempts : 1;
    policy.validate();

    const auto memories = recall(memory, question);
    const std::string question_dialogue = dialogue_line(inquirer, name(), question);
    FinalAnswer out;
    out.verified = uses_verification(config_.pipeline);
    std::optional<std::vector<bool>> useful;
    std::optional<std::size_t> passing;
    for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
        try {
            out.attempts.push_back(run_attempt(question, question_dialogue, inquirer, memories,
                                               static_cast<std::uint32_t>(attempt), useful));
        } catch (const llm::TransportError& e) {
            out.attempt_errors.push_back(e.what());
            spdlog::warn("{}: attempt {} failed: {}", name(), attempt + 1, e.what());
            continue;
        } catch (const llm::ParseError& e) {
            out.attempt_errors.push_back(e.what());
            spdlog::warn("{}: attempt {} failed: {}", name(), attempt + 1, e.what());
            continue;
        }
        if (out.verified && passes_threshold(out.attempts.back(), policy)) {
            passing = out.attempts.size() - 1;
            break;
        }
    }
    if (out.attempts.empty()) {
        throw AgentPipelineError(name() + ": every answer attempt failed", out.attempt_errors);
    }
    out.chosen_index = passing ? *passing : best_candidate(out.attempts);
    out.passed_threshold = passing.has_value();
    out.text = out.attempts[out.chosen_index].text;
    spdlog::debug("{} answered {} after {} attempt(s), score {:.3f}{}", name(), inquirer, out.attempts.size(),
                  out.attempts[out.chosen_index].score, out.passed_threshold ? " (passed)" : "");
    return out;
}

std::optional<std::string> Agent::resolve_target(std::string_view choice, std::span<const std::string> others) const {
    const std::string c = text::trim_copy(choice);
    for (const auto& o : others) {
        if (o == c) return o;
    }
    std::optional<std::string> best;
    for (const auto& o : others) {
        if (!o.empty() && text::contains(c, o) && (!best || o.size() > best->size())) best = o;
    }
    return best;
}

AskResult Agent::ask_question(const memory::MemoryStore& memory, std::span<const std::string> other_players,
                              std::uint32_t round) {
    if (other_players.empty()) throw PreconditionError("no other players to ask");
    if (std::find(other_players.begin(), other_players.end(), name()) != other_players.end()) {
        throw PreconditionError(name() + " cannot ask themselves");
    }
    AskResult out;
    if (other_players.size() == 1) {
        out.target = other_players.front();
    } else {
        Bindings b = base_bindings();
        const std::string key = prompts_->key(locale_, "select_target");
        b["key"] = key;
        b["other_players"] = list_text(other_players);
        b["other_players_count"] = std::to_string(other_players.size());
        b["relevant_memories"] = memories_text(recall(memory, b["other_players"]));
        b["candidates"] = text::join(std::vector<std::string>(other_players.begin(), other_players.end()), "\n");
        for (std::uint32_t attempt = 0; attempt < 2 && out.target.empty(); ++attempt) {
            try {
                const auto reply = llm::chat_structured(
                    *gateway_, request("select_target", "select_target", b, {key}, round * 4 + attempt), {key},
                    retry_instruction());
                if (auto t = resolve_target(*llm::find_entry(reply.entries, key), other_players)) out.target = *t;
            } catch (const llm::ParseError& e) {
                spdlog::info("{}: target selection unusable ({})", name(), e.what());
            }
        }
        if (out.target.empty()) {
            const auto h = stable_hash({config_.seed, text::fnv1a64(name()), round});
            out.target = other_players[static_cast<std::size_t>(h) % other_players.size()];
            spdlog::info("{}: no valid target chosen, falling back to {}", name(), out.target);
        }
    }

    Bindings b = base_bindings();
    const std::string key = prompts_->key(locale_, "ask_question");
    b["key"] = key;
    b["player_to_ask"] = out.target;
    b["relevant_memories"] = memories_text(recall(memory, out.target));
    try {
        const auto reply = llm::chat_structured(*gateway_, request("ask_question", "ask_question", b, {key}, round),
                                                {key}, retry_instruction());
        out.question = text::trim_copy(*llm::find_entry(reply.entries, key));
    } catch (const llm::ParseError& e) {
        spdlog::info("{}: question output unusable ({})", name(), e.what());
    }
    if (out.question.empty()) {
        out.question = prompts_->render_key(locale_, "default_question", {{"target", out.target}});
    }
    return out;
}

std::string Agent::ask_follow_up(const memory::MemoryStore& memory, std::string_view respondent,
                                 std::string_view respondent_answer) {
    Bindings b = base_bindings();
    b["current_dialogue"] = dialogue_line(respondent, host_name(), respondent_answer);
    b["relevant_memories"] = memories_text(recall(memory, respondent_answer));
    b["relationship_with_interlocutor"] = relationship_with(respondent);
    b["respondent"] = std::string(respondent);
    b["respondent_answer"] = std::string(respondent_answer);
    b["question_tag"] = prompts_->key(locale_, "question_tag");
    const auto resp = gateway_->chat(request("follow_up", "follow_up", b));
    std::string q = llm::extract_tagged_answer(resp.text, prompts_->key(locale_, "question_tag")).text;
    if (q.empty()) q = prompts_->render_key(locale_, "default_question", {{"target", std::string(respondent)}});
    return q;
}

VoteResult Agent::vote(const memory::MemoryStore& memory, std::span<const std::string> candidates,
                       std::string_view host_instruction, bool memoryless, std::string_view transcript_context,
                       std::uint32_t round) {
    if (candidates.empty()) throw PreconditionError("no candidates to vote for");
    const std::string host = host_name();
    Bindings b = base_bindings();
    b["current_dialogue"] = dialogue_line(host, name(), host_instruction);
    if (memoryless) {
        b["relevant_memories"] = text::trim(transcript_context).empty() ? prompts_->key(locale_, "no_memories")
                                                                        : std::string(transcript_context);
    } else {
        b["relevant_memories"] = memories_text(recall(memory, host_instruction));
    }
    b["relationship_with_interlocutor"] = relationship_with(host);
    b["inquirer"] = host;
    b["question"] = std::string(host_instruction);
    b["answer_tag"] = prompts_->key(locale_, "answer_tag");
    b["candidates"] = text::join(std::vector<std::string>(candidates.begin(), candidates.end()), "\n");
    b["memoryless"] = memoryless ? "true" : "false";

    VoteResult out;
    for (std::uint32_t attempt = 0; attempt < 2; ++attempt) {
        const auto resp = gateway_->chat(request("vote", "answer", b, {}, round * 4 + attempt));
        ++out.calls;
        out.utterance = llm::extract_tagged_answer(resp.text, prompts_->key(locale_, "answer_tag")).text;
        out.choice = match_candidate(out.utterance, candidates);
        if (!out.choice) {
            if (auto idx = option_letter(out.utterance, candidates.size())) out.choice = candidates[*idx];
        }
        if (out.choice) return out;
        spdlog::info("{}: vote names no candidate: {}", name(), out.utterance);
    }
    return out;
}

}  // namespace jubensha::agent
