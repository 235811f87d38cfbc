#include "jubensha/eval/offline.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "jubensha/agent/offline.hpp"
#include "jubensha/agent/timeline.hpp"
#include "jubensha/text.hpp"

namespace jubensha::eval {

namespace {

using llm::ChatRequest;

std::string binding(const ChatRequest& r, const std::string& key) {
    auto it = r.bindings.find(key);
    return it == r.bindings.end() ? std::string() : it->second;
}

bool zh(const ChatRequest& r) { return binding(r, "locale") == "zh"; }

std::string key0(const ChatRequest& r) { return r.response_keys.empty() ? "answer" : r.response_keys.front(); }

double overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty()) return 0;
    std::size_t n = 0;
    for (const auto& t : a) n += b.count(t);
    return static_cast<double>(n) / static_cast<double>(a.size());
}

std::vector<std::string> pool(const ChatRequest& r) {
    std::vector<std::string> out;
    for (const char* k : {"character_story", "character_timeline", "relevant_memories"}) {
        for (auto& s : text::split_sentences(binding(r, k))) out.push_back(std::move(s));
    }
    return out;
}

// Sentences ordered by term overlap with the query, best first; ties keep pool order.
std::vector<std::string> ranked(const std::vector<std::string>& sentences, std::string_view query) {
    const auto q = text::content_terms(query);
    std::vector<std::pair<std::size_t, std::size_t>> scored;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        std::size_t n = 0;
        for (const auto& t : text::content_terms(sentences[i])) n += q.count(t);
        if (n) scored.emplace_back(n, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    for (const auto& [n, i] : scored) out.push_back(sentences[i]);
    return out;
}

struct Option {
    char letter;
    std::string text;
};

std::vector<Option> options_in(std::string_view q) {
    std::vector<Option> out;
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
        const char c = q[i];
        if (c < 'A' || c > 'F' || q[i + 1] != '.') continue;
        if (i > 0 && std::isalnum(static_cast<unsigned char>(q[i - 1]))) continue;
        std::size_t end = i + 2;
        while (end < q.size() && q[end] != '\n' && q[end] != ';' &&
               !(end + 1 < q.size() && q[end] == ' ' && q[end + 1] >= 'A' && q[end + 1] <= 'F' &&
                 end + 2 < q.size() && q[end + 2] == '.')) {
            ++end;
        }
        out.push_back({c, text::trim_copy(q.substr(i + 2, end - i - 2))});
        i = end - 1;
    }
    return out;
}

std::set<char> letters_in(std::string_view s) {
    std::set<char> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c < 'A' || c > 'F') continue;
        const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]));
        const bool right = i + 1 == s.size() || !std::isalnum(static_cast<unsigned char>(s[i + 1]));
        if (left && right) out.insert(c);
    }
    return out;
}

std::string generate(const ChatRequest& r, bool story) {
    const std::string name = binding(r, "character_name");
    const auto sentences = text::split_sentences(binding(r, story ? "character_story" : "character_timeline"));
    const int count = std::stoi(binding(r, "question_count"));
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (int i = 0; i < count && !sentences.empty(); ++i) {
        const std::string& s = sentences[static_cast<std::size_t>(i) % sentences.size()];
        const auto times = agent::time_references(s);
        std::string q;
        if (!times.empty()) {
            q = zh(r) ? name + "在" + times.front() + "做了什么？" : "What did " + name + " do at " + times.front() + "?";
        } else {
            const auto terms = text::content_terms(s);
            std::vector<std::string> head(terms.begin(), std::next(terms.begin(), std::min<std::ptrdiff_t>(3, terms.size())));
            q = zh(r) ? "关于" + text::join(head, "、") + "，" + name + "的剧本说了什么？"
                      : "What does " + name + "'s script say about " + text::join(head, ", ") + "?";
        }
        list.push_back({{"question", q}, {"answer", s}, {"source", s}});
    }
    return "```json\n" + list.dump(1, '\t') + "\n```";
}

}  // namespace

void install_offline_eval_responders(llm::MockBackend& backend) {
    backend.set_responder("qa_gen_story", [](const ChatRequest& r, std::uint64_t) { return generate(r, true); });
    backend.set_responder("qa_gen_timeline", [](const ChatRequest& r, std::uint64_t) { return generate(r, false); });

    backend.set_responder("qa_answer", [](const ChatRequest& r, std::uint64_t) {
        const auto sentences = pool(r);
        const auto questions = text::split_lines(binding(r, "question_list"));
        std::vector<std::pair<std::string, std::string>> entries;
        for (std::size_t i = 0; i < r.response_keys.size(); ++i) {
            const auto best = i < questions.size() ? ranked(sentences, questions[i]) : std::vector<std::string>{};
            entries.emplace_back(r.response_keys[i],
                                 best.empty() ? (zh(r) ? "不知道。" : "I do not know.") : best.front());
        }
        return agent::fenced_json(entries);
    });

    backend.set_responder("qa_judge", [](const ChatRequest& r, std::uint64_t) {
        const bool ok = overlap(text::content_terms(binding(r, "answer")), text::content_terms(binding(r, "reply"))) >= 0.5;
        return agent::fenced_json({{key0(r), zh(r) ? (ok ? "正确" : "错误") : (ok ? "Correct" : "Incorrect")}});
    });

    backend.set_responder("inf_answer", [](const ChatRequest& r, std::uint64_t seed) {
        const auto opts = options_in(binding(r, "question"));
        if (opts.empty()) return agent::fenced_json({{key0(r), zh(r) ? "不知道。" : "I do not know."}});
        const std::string context = binding(r, "relevant_memories");
        std::size_t best = text::hash_combine(seed, 1) % opts.size();
        std::size_t best_count = 0;
        for (std::size_t i = 0; i < opts.size(); ++i) {
            std::size_t n = 0;
            for (std::size_t p = context.find(opts[i].text); !opts[i].text.empty() && p != std::string::npos;
                 p = context.find(opts[i].text, p + 1)) {
                ++n;
            }
            if (n > best_count) {
                best_count = n;
                best = i;
            }
        }
        return agent::fenced_json({{key0(r), std::string(1, opts[best].letter) + ". " + opts[best].text}});
    });

    backend.set_responder("inf_judge", [](const ChatRequest& r, std::uint64_t) {
        const auto want = letters_in(binding(r, "answer"));
        const bool ok = !want.empty() && want == letters_in(binding(r, "reply"));
        return agent::fenced_json({{key0(r), zh(r) ? (ok ? "正确" : "错误") : (ok ? "Correct" : "Incorrect")}});
    });

    backend.set_responder("rationale_predict", [](const ChatRequest& r, std::uint64_t) {
        auto best = ranked(pool(r), binding(r, "question") + " " + binding(r, "previous_reply"));
        if (best.size() > 3) best.resize(3);
        if (best.empty()) best.push_back(zh(r) ? "我没有找到依据。" : "I found no supporting detail.");
        return agent::fenced_json({{key0(r), text::join(best, zh(r) ? "" : " ")}});
    });

    backend.set_responder("rationale_judge", [](const ChatRequest& r, std::uint64_t) {
        const double ov = overlap(text::content_terms(binding(r, "ground_truth_rationale")),
                                  text::content_terms(binding(r, "player_rationale")));
        const int score = std::clamp(1 + static_cast<int>(4 * ov + 0.5), 1, 5);
        return agent::fenced_json({{key0(r), std::to_string(score)}});
    });
}

}  // namespace jubensha::eval
