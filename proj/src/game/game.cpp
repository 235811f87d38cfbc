#include "jubensha/game/game.hpp"

#include <algorithm>
#include <memory>

#include <spdlog/spdlog.h>

#include "jubensha/text.hpp"

namespace jubensha::game {

namespace {

constexpr std::string_view kStageNames[] = {"distribute",    "self_intro",        "initial_q", "open_q_pre_clues",
                                            "clue_reveal",   "open_q_post_clues", "voting",    "outcome"};
constexpr std::string_view kKindNames[] = {"host", "answer", "question", "clue", "ballot", "system"};

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::string_view (&names)[N], const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    throw SchemaError("field-type", std::string("unknown ") + what + " '" + std::string(s) + "'");
}

bool is_public(EventKind k) {
    return k == EventKind::host || k == EventKind::answer || k == EventKind::question || k == EventKind::clue;
}

}  // namespace

std::string to_string(Stage s) { return std::string(kStageNames[static_cast<int>(s)]); }
std::string to_string(EventKind k) { return std::string(kKindNames[static_cast<int>(k)]); }
std::string to_string(Winner w) { return w == Winner::civilians ? "civilians" : "murderer"; }
Stage stage_from_string(std::string_view s) { return parse_enum<Stage>(s, kStageNames, "stage"); }
EventKind event_kind_from_string(std::string_view s) { return parse_enum<EventKind>(s, kKindNames, "event kind"); }

Winner winner_from_string(std::string_view s) {
    if (s == "civilians") return Winner::civilians;
    if (s == "murderer") return Winner::murderer;
    throw SchemaError("field-type", "unknown winner '" + std::string(s) + "'");
}

Tally tally(std::span<const Ballot> ballots, std::string_view murderer, std::span<const std::string> players) {
    if (ballots.empty()) throw PreconditionError("no ballots to tally");
    Tally t;
    for (const auto& p : players) t.counts[p] = 0;
    for (const auto& b : ballots) {
        if (b.choice && t.counts.count(*b.choice)) {
            ++t.counts[*b.choice];
            ++t.valid;
        } else {
            ++t.invalid;
        }
    }
    const std::int64_t mine = t.counts.count(std::string(murderer)) ? t.counts[std::string(murderer)] : 0;
    bool strict = mine > 0;
    for (const auto& [name, n] : t.counts) {
        if (name != murderer && n >= mine) strict = false;
    }
    t.winner = strict ? Winner::civilians : Winner::murderer;
    t.no_valid_ballots = t.valid == 0;
    t.murderer_vote_fraction = t.valid == 0 ? 0.0 : static_cast<double>(mine) / static_cast<double>(t.valid);
    return t;
}

double murderer_identification_accuracy(const GameOutcome& outcome, std::string_view murderer) {
    if (outcome.memoryless_ballots.empty()) throw PreconditionError("no memoryless ballots");
    std::int64_t valid = 0;
    std::int64_t hits = 0;
    for (const auto& b : outcome.memoryless_ballots) {
        if (!b.choice) continue;
        ++valid;
        hits += *b.choice == murderer ? 1 : 0;
    }
    if (valid == 0) throw NoValidBallots("every memoryless ballot is invalid");
    return static_cast<double>(hits) / static_cast<double>(valid);
}

void GameConfig::validate() const {
    if (sv_max_attempts < 1) throw PreconditionError("sv_max_attempts must be at least 1");
    if (open_rounds_pre_clues < 0 || open_rounds_post_clues < 0 || memoryless_vote_count < 0) {
        throw PreconditionError("round counts must be non-negative");
    }
    if (retrieval_k == 0) throw PreconditionError("retrieval_k must be positive");
}

agent::AgentConfig GameConfig::agent_config() const {
    agent::AgentConfig c;
    c.pipeline = pipeline;
    c.sv_max_attempts = sv_max_attempts;
    c.host_policy = agent::VerificationPolicy::host(sv_max_attempts);
    c.player_policy = agent::VerificationPolicy::player(sv_max_attempts);
    c.length_unit = length_unit;
    c.retrieval_k = retrieval_k;
    c.temperature = temperature;
    c.seed = seed;
    return c;
}

StageError::StageError(Stage stage, std::vector<TranscriptEvent> partial, std::exception_ptr cause,
                       const std::string& what)
    : Error("stage " + to_string(stage) + " failed: " + what), stage_(stage), partial_(std::move(partial)),
      cause_(std::move(cause)) {}

std::string transcript_text(std::span<const TranscriptEvent> events, const agent::PromptLibrary& prompts,
                            agent::Locale locale) {
    std::vector<std::string> lines;
    for (const auto& e : events) {
        if (!is_public(e.kind)) continue;
        if (e.kind == EventKind::clue) {
            lines.push_back(e.utterance);
            continue;
        }
        lines.push_back(prompts.render(locale, "memory_line",
                                       {{"speaker", e.speaker}, {"addressee", e.addressee}, {"utterance", e.utterance}}));
    }
    return text::join(lines, "\n");
}

namespace {

class Host {
public:
    Host(const script::ScriptPack& pack, const GameConfig& config, llm::Gateway& gateway,
         const agent::PromptLibrary& prompts)
        : pack_(pack), config_(config), gateway_(gateway), prompts_(prompts), locale_(config.locale),
          host_(prompts.key(locale_, "host_name")), everyone_(prompts.key(locale_, "everyone")) {
        for (const auto& c : pack.characters) {
            agents_.push_back(std::make_unique<agent::Agent>(pack, c, gateway, prompts, locale_, config.agent_config()));
            memories_.emplace_back(c.name);
            names_.push_back(c.name);
        }
    }

    GameResult run() {
        stage(Stage::distribute, [&] { distribute(); });
        stage(Stage::self_intro, [&] { introductions(); });
        stage(Stage::open_q_pre_clues, [&] { open_rounds(Stage::open_q_pre_clues, config_.open_rounds_pre_clues, 0); });
        stage(Stage::clue_reveal, [&] { clues(); });
        stage(Stage::open_q_post_clues, [&] {
            open_rounds(Stage::open_q_post_clues, config_.open_rounds_post_clues,
                        static_cast<std::uint32_t>(config_.open_rounds_pre_clues));
        });
        stage(Stage::voting, [&] { voting(); });
        stage(Stage::outcome, [&] { outcome(); });
        GameResult r;
        r.transcript = std::move(events_);
        r.outcome = std::move(outcome_);
        r.memories = std::move(memories_);
        return r;
    }

private:
    template <typename F>
    void stage(Stage s, F&& body) {
        current_ = s;
        spdlog::info("stage {}", to_string(s));
        try {
            body();
        } catch (const PreconditionError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(current_, events_, std::current_exception(), e.what());
        }
    }

    std::string host_line(std::string_view stage_key, std::string_view template_name, const agent::Bindings& b,
                          std::size_t index) const {
        if (auto it = pack_.host_script.find(std::string(stage_key)); it != pack_.host_script.end() && !it->second.empty()) {
            const std::string& line = it->second[index % it->second.size()];
            try {
                return agent::render_template(line, b);
            } catch (const agent::TemplateError&) {
                return line;
            }
        }
        return prompts_.render(locale_, template_name, b);
    }

    const TranscriptEvent& emit(std::string speaker, std::string addressee, std::string utterance, EventKind kind,
                                std::uint32_t round = 0, std::optional<AnswerMeta> meta = std::nullopt) {
        TranscriptEvent e;
        e.turn = static_cast<std::int64_t>(events_.size());
        e.stage = current_;
        e.speaker = std::move(speaker);
        e.addressee = std::move(addressee);
        e.utterance = std::move(utterance);
        e.kind = kind;
        e.round = round;
        e.answer = std::move(meta);
        events_.push_back(std::move(e));
        const TranscriptEvent& ev = events_.back();
        if (is_public(ev.kind)) observe(ev);
        return ev;
    }

    void observe(const TranscriptEvent& e) {
        const memory::RecordKind kind = e.kind == EventKind::clue   ? memory::RecordKind::clue
                                        : e.kind == EventKind::host ? memory::RecordKind::host
                                                                    : memory::RecordKind::utterance;
        const std::string line =
            e.kind == EventKind::clue
                ? e.utterance
                : prompts_.render(locale_, "memory_line",
                                  {{"speaker", e.speaker}, {"addressee", e.addressee}, {"utterance", e.utterance}});
        for (auto& m : memories_) m.record(gateway_, line, e.turn, kind);
    }

    std::size_t index_of(std::string_view name) const {
        return static_cast<std::size_t>(std::find(names_.begin(), names_.end(), name) - names_.begin());
    }

    void answer(std::size_t who, const std::string& question, const std::string& inquirer, std::uint32_t round) {
        const auto fa = agents_[who]->respond(question, inquirer, memories_[who]);
        const auto& c = fa.attempts[fa.chosen_index];
        AnswerMeta meta{static_cast<std::int64_t>(fa.attempts.size()),
                        static_cast<std::int64_t>(fa.chosen_index),
                        fa.passed_threshold,
                        fa.verified,
                        c.score,
                        c.length,
                        c.length_unit};
        emit(names_[who], inquirer, fa.text, EventKind::answer, round, meta);
    }

    void distribute() {
        for (const auto& n : names_) {
            emit(host_, n, prompts_.render(locale_, "distribute", {{"agent_name", n}}), EventKind::system);
        }
    }

    void introductions() {
        for (std::size_t p = 0; p < names_.size(); ++p) {
            current_ = Stage::self_intro;
            const std::string q = host_line("self_intro", "host_self_intro",
                                            {{"agent_name", names_[p]}, {"victim", pack_.victim_name}}, p);
            emit(host_, names_[p], q, EventKind::host);
            answer(p, q, host_, 0);
            const std::string intro = events_.back().utterance;
            current_ = Stage::initial_q;
            for (std::size_t o = 0; o < names_.size(); ++o) {
                if (o == p) continue;
                const std::string fq = agents_[o]->ask_follow_up(memories_[o], names_[p], intro);
                emit(names_[o], names_[p], fq, EventKind::question);
                answer(p, fq, names_[o], 0);
            }
        }
    }

    void open_rounds(Stage s, int rounds, std::uint32_t offset) {
        for (int r = 1; r <= rounds; ++r) {
            current_ = s;
            const auto round = static_cast<std::uint32_t>(r);
            emit(host_, everyone_,
                 host_line("open_questions", "host_open_round",
                           {{"round", std::to_string(r)}, {"rounds", std::to_string(rounds)}},
                           offset + round - 1),
                 EventKind::host, round);
            for (std::size_t p = 0; p < names_.size(); ++p) {
                std::vector<std::string> others;
                for (const auto& n : names_) {
                    if (n != names_[p]) others.push_back(n);
                }
                const auto ask = agents_[p]->ask_question(memories_[p], others, offset + round);
                emit(names_[p], ask.target, ask.question, EventKind::question, round);
                answer(index_of(ask.target), ask.question, names_[p], round);
            }
        }
    }

    void clues() {
        emit(host_, everyone_, host_line("clue_reveal", "host_clue_intro", {}, 0), EventKind::host);
        std::vector<std::string> owners = names_;
        for (const auto& [owner, cards] : pack_.clue_cards) {
            if (std::find(owners.begin(), owners.end(), owner) == owners.end()) owners.push_back(owner);
        }
        for (const auto& owner : owners) {
            auto it = pack_.clue_cards.find(owner);
            if (it == pack_.clue_cards.end()) continue;
            for (const auto& card : it->second) {
                emit(host_, everyone_, prompts_.render(locale_, "clue_line", {{"owner", owner}, {"clue", card}}),
                     EventKind::clue);
            }
        }
    }

    void voting() {
        std::vector<std::string> options;
        for (std::size_t i = 0; i < names_.size(); ++i) {
            options.push_back(prompts_.render_key(locale_, "vote_option",
                                                  {{"letter", std::string(1, static_cast<char>('A' + i))},
                                                   {"name", names_[i]}}));
        }
        const std::string instruction =
            host_line("voting", "host_vote",
                      {{"victim", pack_.victim_name},
                       {"options", text::join(options, locale_ == agent::Locale::zh ? "，" : ", ")}},
                      0);
        emit(host_, everyone_, instruction, EventKind::host);
        const std::string context = transcript_text(events_, prompts_, locale_);

        auto cast = [&](std::size_t p, bool memoryless, std::uint32_t round) {
            const auto v = agents_[p]->vote(memories_[p], names_, instruction, memoryless, context, round);
            Ballot b{names_[p], v.choice, round, v.utterance};
            emit(names_[p], host_, v.utterance, EventKind::ballot, round);
            return b;
        };
        for (std::size_t p = 0; p < names_.size(); ++p) outcome_.ballots.push_back(cast(p, false, 0));
        for (int r = 1; r <= config_.memoryless_vote_count; ++r) {
            for (std::size_t p = 0; p < names_.size(); ++p) {
                outcome_.memoryless_ballots.push_back(cast(p, true, static_cast<std::uint32_t>(r)));
            }
        }
    }

    void outcome() {
        outcome_.murderer = pack_.murderer().name;
        const Tally in_game = tally(outcome_.ballots, outcome_.murderer, names_);
        outcome_.in_game_winner = in_game.winner;
        if (outcome_.memoryless_ballots.empty()) {
            outcome_.murderer_vote_fraction = 0;
            outcome_.fraction_undefined = true;
        } else {
            const Tally ml = tally(outcome_.memoryless_ballots, outcome_.murderer, names_);
            outcome_.murderer_vote_fraction = ml.murderer_vote_fraction;
            outcome_.fraction_undefined = ml.no_valid_ballots;
        }
        std::vector<std::string> items;
        for (const auto& n : names_) {
            items.push_back(prompts_.render_key(locale_, "tally_item",
                                                {{"name", n}, {"count", std::to_string(in_game.counts.at(n))}}));
        }
        const std::string winner_line = prompts_.key(
            locale_, in_game.winner == Winner::civilians ? "winner_civilians" : "winner_murderer");
        emit(host_, everyone_,
             host_line("outcome", "host_outcome",
                       {{"tally", text::join(items, locale_ == agent::Locale::zh ? "，" : ", ")},
                        {"murderer", outcome_.murderer},
                        {"winner_line", winner_line}},
                       0),
             EventKind::system);
    }

    const script::ScriptPack& pack_;
    const GameConfig& config_;
    llm::Gateway& gateway_;
    const agent::PromptLibrary& prompts_;
    agent::Locale locale_;
    std::string host_;
    std::string everyone_;
    std::vector<std::unique_ptr<agent::Agent>> agents_;
    std::vector<memory::MemoryStore> memories_;
    std::vector<std::string> names_;
    std::vector<TranscriptEvent> events_;
    GameOutcome outcome_;
    Stage current_ = Stage::distribute;
};

}  // namespace

GameResult run_game(const script::ScriptPack& pack, const GameConfig& config, llm::Gateway& gateway,
                    const agent::PromptLibrary& prompts) {
    config.validate();
    if (const auto report = script::validate_pack(pack); !report.ok()) {
        const auto& v = report.violations.front();
        throw PreconditionError("pack failed validation: " + to_string(v.code) + " at " + v.location);
    }
    return Host(pack, config, gateway, prompts).run();
}

}  // namespace jubensha::game
