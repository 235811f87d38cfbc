#include "jubensha/agent/offline.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <json.hpp>

#include "jubensha/agent/timeline.hpp"
#include "jubensha/text.hpp"

namespace jubensha::agent {

namespace {

using llm::ChatRequest;

std::string binding(const ChatRequest& r, const std::string& key) {
    auto it = r.bindings.find(key);
    return it == r.bindings.end() ? std::string() : it->second;
}

bool zh(const ChatRequest& r) { return binding(r, "locale") == "zh"; }

std::uint64_t pick(std::uint64_t seed, std::uint64_t salt) { return text::hash_combine(seed, salt); }

// Drops a leading 【...】 heading from a timeline sentence.
std::string strip_heading(std::string s) {
    if (text::starts_with(s, "【")) {
        const auto close = s.find("】");
        if (close != std::string::npos) s = s.substr(close + std::string("】").size());
    }
    return text::trim_copy(s);
}

std::vector<std::string> sentences(std::string_view block) {
    std::vector<std::string> out;
    for (auto& s : text::split_sentences(block)) {
        s = strip_heading(std::move(s));
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

std::string replace_word(const std::string& s, std::string_view from, std::string_view to) {
    std::string out;
    std::size_t i = 0;
    auto alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '\''; };
    while (i < s.size()) {
        if (s.compare(i, from.size(), from) == 0 && (i == 0 || !alpha(s[i - 1])) &&
            (i + from.size() >= s.size() || !alpha(s[i + from.size()]))) {
            out += to;
            i += from.size();
        } else {
            out += s[i++];
        }
    }
    return out;
}

std::string first_person(const std::string& s, bool chinese) {
    if (chinese) return text::replace_all(s, "你", "我");
    static const std::set<std::string> object_cues = {
        "to",     "with",     "at",    "for",     "from",  "about", "of",    "by",    "without", "against",
        "near",   "behind",   "saw",   "told",    "asked", "gave",  "met",   "called", "see",    "report",
        "promised", "replace", "pay",  "lent",    "pressed", "thanks", "thank", "let", "help",    "make",
        "like",   "trust",    "blame", "followed", "left", "sent",  "showed", "warned", "paid",   "owed"};
    std::string out;
    std::string prev;
    std::size_t i = 0;
    auto alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '\''; };
    while (i < s.size()) {
        if (!alpha(s[i])) {
            if (s[i] == ',' || s[i] == '.' || s[i] == ';') prev.clear();
            out += s[i++];
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && alpha(s[j])) ++j;
        std::string w = s.substr(i, j - i);
        const std::string lw = text::to_lower_ascii(w);
        const bool cap = std::isupper(static_cast<unsigned char>(w[0])) != 0;
        if (lw == "you") {
            w = object_cues.count(prev) ? "me" : "I";
        } else if (lw == "your") {
            w = cap ? "My" : "my";
        } else if (lw == "yours") {
            w = cap ? "Mine" : "mine";
        } else if (lw == "yourself") {
            w = cap ? "Myself" : "myself";
        } else if (prev == "i" && lw == "are") {
            w = "am";
        } else if (prev == "i" && lw == "were") {
            w = "was";
        }
        out += w;
        prev = text::to_lower_ascii(w);
        i = j;
    }
    return out;
}

std::string third_person(const std::string& s, const std::string& name, bool chinese) {
    if (chinese) return text::replace_all(text::replace_all(s, "我", name), "你", name);
    std::string out = replace_word(s, "myself", name);
    out = replace_word(out, "my", name + "'s");
    out = replace_word(out, "My", name + "'s");
    out = replace_word(out, "me", name);
    out = replace_word(out, "I", name);
    return out;
}

double overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty()) return 0;
    std::size_t n = 0;
    for (const auto& t : a) n += b.count(t);
    return static_cast<double>(n) / static_cast<double>(a.size());
}

bool asks_about_time(std::string_view q) {
    const std::string l = text::to_lower_ascii(q);
    for (std::string_view w : {"time", "when", "timeline", "what did", "where", "doing", "day", "时间", "几点",
                               "做了", "做过", "在哪", "当天"}) {
        if (text::contains(l, w)) return true;
    }
    return has_time_reference(q);
}

std::vector<std::string> lines_of(const std::string& block) {
    std::vector<std::string> out;
    for (auto& l : text::split_lines(block)) {
        if (!text::trim(l).empty()) out.push_back(text::trim_copy(l));
    }
    return out;
}

std::string verdict_json(const ChatRequest& r, const std::vector<bool>& verdicts, bool english_correct) {
    std::vector<std::pair<std::string, std::string>> entries;
    const bool chinese = zh(r);
    for (std::size_t i = 0; i < verdicts.size() && i < r.response_keys.size(); ++i) {
        std::string v;
        if (english_correct) {
            v = chinese ? (verdicts[i] ? "正确" : "错误") : (verdicts[i] ? "correct" : "incorrect");
        } else {
            v = verdicts[i] ? "True" : "False";
        }
        entries.emplace_back(r.response_keys[i], v);
    }
    return fenced_json(entries);
}

std::string answer(const ChatRequest& r, std::uint64_t seed) {
    const bool chinese = zh(r);
    const std::string name = binding(r, "agent_name");
    const std::string question = binding(r, "question");
    const std::string inquirer = binding(r, "inquirer");
    const bool murderer = binding(r, "role") == "murderer";
    const std::string victim = binding(r, "victim");
    const bool from_host = !text::contains(binding(r, "players"), inquirer) || inquirer.empty();

    auto timeline = sentences(binding(r, "agent_timeline"));
    // A murderer keeps quiet about anything that puts them near the victim.
    if (murderer) {
        std::vector<std::string> kept;
        for (auto& s : timeline) {
            if (!text::contains(s, victim)) kept.push_back(std::move(s));
        }
        timeline = std::move(kept);
    }
    const auto qterms = text::content_terms(question);
    std::vector<std::string> parts;
    if (from_host) {
        parts.push_back(chinese ? "我是" + name + "。" : "I am " + name + ".");
        for (const auto& s : sentences(binding(r, "agent_story"))) {
            if (!murderer || !text::contains(s, victim)) parts.push_back(first_person(s, chinese));
        }
    }
    std::size_t i = 0;
    for (const auto& s : timeline) {
        const bool relevant = !from_host && overlap(qterms, text::content_terms(s)) > 0;
        const bool keep = from_host ? pick(seed, i) % 10 < 8 : (relevant || pick(seed, i) % 10 < 4);
        if (keep) parts.push_back(first_person(s, chinese));
        ++i;
    }
    if (pick(seed, 0xfab) % 4 == 0) {
        parts.push_back(chinese ? "凌晨03:00，我开着直升机绕着船飞了一圈。" : "At 03:00, I flew a helicopter around the ship.");
    }
    if (parts.empty()) parts.push_back(chinese ? "我不太记得了。" : "I do not remember much about that.");
    const std::string tag = binding(r, "answer_tag");
    return "#" + tag + "#" + (chinese ? "：" : ": ") + text::join(parts, chinese ? "" : " ");
}

std::string vote(const ChatRequest& r, std::uint64_t seed) {
    const bool chinese = zh(r);
    const std::string name = binding(r, "agent_name");
    const std::string victim = binding(r, "victim");
    const auto candidates = lines_of(binding(r, "candidates"));
    const auto memories = text::split_lines(binding(r, "relevant_memories"));
    std::size_t best = 0;
    double best_score = -1;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (candidates[c] == name && candidates.size() > 1) continue;
        double score = static_cast<double>(pick(seed, c) % 100) / 66.0;
        for (const auto& line : memories) {
            const bool clue = text::starts_with(line, "Clue card about ") || text::starts_with(line, "关于");
            // Only what was said counts, not who said it.
            std::string_view m = line;
            for (std::string_view open : {": \"", "：\""}) {
                if (const auto p = m.find(open); !clue && p != std::string_view::npos) {
                    m = m.substr(p + open.size());
                    break;
                }
            }
            if (!text::contains(m, candidates[c])) continue;
            if (clue) score += 1.0;
            if (text::contains(m, victim)) score += 0.5;
        }
        if (score > best_score) {
            best_score = score;
            best = c;
        }
    }
    const std::string letter(1, static_cast<char>('A' + best));
    const std::string tag = binding(r, "answer_tag");
    if (chinese) return "#" + tag + "#：我的投票选择是" + letter + ". " + candidates[best] + "。";
    return "#" + tag + "#: My vote is " + letter + ". " + candidates[best] + ".";
}

std::string first_time(const std::string& block) {
    auto times = time_references(block);
    return times.empty() ? std::string() : times.front();
}

}  // namespace

std::string fenced_json(const std::vector<std::pair<std::string, std::string>>& entries) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : entries) j[k] = v;
    return "```json\n" + j.dump(1, '\t') + "\n```";
}

void install_offline_responders(llm::MockBackend& backend) {
    backend.set_responder("answer", answer);
    backend.set_responder("vote", vote);

    backend.set_responder("decompose_question", [](const ChatRequest& r, std::uint64_t) {
        std::string q = binding(r, "question");
        // Keep only the quoted utterance of a dialogue line.
        for (std::string_view open : {"\"", "“"}) {
            const auto b = q.find(open);
            if (b == std::string::npos) continue;
            const auto e = q.find_last_of(open == "\"" ? "\"" : "”");
            if (e != std::string::npos && e > b) q = q.substr(b + open.size(), e - b - open.size());
            break;
        }
        return text::join(text::split_sentences(q), "\n");
    });

    backend.set_responder("extract_timeline", [](const ChatRequest& r, std::uint64_t) {
        return text::join(sentences(binding(r, "agent_timeline")), "\n");
    });

    backend.set_responder("judge_useful", [](const ChatRequest& r, std::uint64_t) {
        const std::string q = binding(r, "sub_question");
        const auto qterms = text::content_terms(q);
        const bool timeline_question = asks_about_time(q);
        std::vector<bool> v;
        for (const auto& fact : lines_of(binding(r, "fact_lines"))) {
            v.push_back((timeline_question && has_time_reference(fact)) ||
                        overlap(qterms, text::content_terms(fact)) >= 0.5);
        }
        return verdict_json(r, v, false);
    });

    backend.set_responder("judge_included", [](const ChatRequest& r, std::uint64_t) {
        const std::string previous = binding(r, "previous_answer");
        const auto aterms = text::content_terms(previous);
        const auto atimes = time_references(previous);
        std::vector<bool> v;
        for (const auto& fact : lines_of(binding(r, "fact_lines"))) {
            bool times_ok = true;
            for (const auto& t : time_references(fact)) {
                times_ok = times_ok && std::find(atimes.begin(), atimes.end(), t) != atimes.end();
            }
            v.push_back(times_ok && overlap(text::content_terms(first_person(fact, zh(r))), aterms) >= 0.8);
        }
        return verdict_json(r, v, false);
    });

    backend.set_responder("refine", [](const ChatRequest& r, std::uint64_t) {
        const bool chinese = zh(r);
        const bool murderer = binding(r, "role") == "murderer";
        const std::string victim = binding(r, "victim");
        std::string refined = binding(r, "previous_answer");
        for (const auto& fact : lines_of(binding(r, "fact_lines"))) {
            if (murderer && text::contains(fact, victim)) continue;
            refined += chinese ? "" : " ";
            refined += first_person(fact, chinese);
        }
        const std::string key = r.response_keys.empty() ? "answer" : r.response_keys.front();
        return fenced_json({{key, refined}});
    });

    backend.set_responder("decompose_answer", [](const ChatRequest& r, std::uint64_t) {
        const bool chinese = zh(r);
        const std::string name = binding(r, "agent_name");
        std::vector<std::string> facts;
        for (const auto& s : text::split_sentences(binding(r, "statement"))) {
            if (has_time_reference(s)) facts.push_back(third_person(s, name, chinese));
        }
        return text::join(facts, "\n");
    });

    backend.set_responder("verify", [](const ChatRequest& r, std::uint64_t) {
        const bool chinese = zh(r);
        const std::string name = binding(r, "agent_name");
        const std::string timeline = binding(r, "agent_timeline");
        const auto tterms = text::content_terms(first_person(timeline, chinese));
        const auto ttimes = time_references(timeline);
        const auto name_terms = text::content_terms(name);
        std::vector<bool> v;
        for (const auto& fact : lines_of(binding(r, "fact_lines"))) {
            const auto times = time_references(fact);
            bool ok = !times.empty();
            for (const auto& t : times) ok = ok && std::find(ttimes.begin(), ttimes.end(), t) != ttimes.end();
            std::set<std::string> terms;
            for (const auto& t : text::content_terms(text::replace_all(fact, name, ""))) {
                if (!name_terms.count(t)) terms.insert(t);
            }
            v.push_back(ok && overlap(terms, tterms) >= 0.6);
        }
        return verdict_json(r, v, true);
    });

    backend.set_responder("select_target", [](const ChatRequest& r, std::uint64_t seed) {
        const auto candidates = lines_of(binding(r, "candidates"));
        const std::string key = r.response_keys.empty() ? "name" : r.response_keys.front();
        if (candidates.empty()) return fenced_json({{key, ""}});
        return fenced_json({{key, candidates[pick(seed, 7) % candidates.size()]}});
    });

    backend.set_responder("ask_question", [](const ChatRequest& r, std::uint64_t) {
        const bool chinese = zh(r);
        const std::string target = binding(r, "player_to_ask");
        const std::string time = first_time(binding(r, "relevant_memories"));
        std::string q;
        if (chinese) {
            q = target + "，" + (time.empty() ? "你在案发日晚上都做了什么？" : "你说" + time + "的时候你在做什么，有谁能证明？");
        } else {
            q = target + ", " + (time.empty() ? "what were you doing on the evening of the incident?"
                                              : "you mentioned " + time + ". Who can confirm where you were then?");
        }
        const std::string key = r.response_keys.empty() ? "question" : r.response_keys.front();
        return fenced_json({{key, q}});
    });

    backend.set_responder("follow_up", [](const ChatRequest& r, std::uint64_t) {
        const bool chinese = zh(r);
        const std::string respondent = binding(r, "respondent");
        const std::string time = first_time(binding(r, "respondent_answer"));
        const std::string tag = binding(r, "question_tag");
        if (chinese) {
            return "#" + tag + "#：" + respondent + "，" +
                   (time.empty() ? "你和死者最后一次见面是什么时候？" : time + "之后你去了哪里？");
        }
        return "#" + tag + "#: " + respondent + ", " +
               (time.empty() ? "when did you last see the victim?" : "where did you go after " + time + "?");
    });
}

}  // namespace jubensha::agent
