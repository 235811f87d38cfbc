#include "jubensha/eval/qa.hpp"

#include "jubensha/errors.hpp"
#include "jubensha/fsutil.hpp"
#include "jubensha/text.hpp"

namespace jubensha::eval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(QAKind k) {
    switch (k) {
        case QAKind::factual_story: return "factual_story";
        case QAKind::factual_timeline: return "factual_timeline";
        case QAKind::inferential: return "inferential";
    }
    return "unknown";
}

std::string to_string(QuestionClass c) {
    switch (c) {
        case QuestionClass::own_q: return "OwnQ";
        case QuestionClass::cq: return "CQ";
        case QuestionClass::mq: return "MQ";
    }
    return "unknown";
}

std::string to_string(ChoiceMode m) { return m == ChoiceMode::single ? "single" : "multi"; }
std::string to_string(Verdict v) { return v == Verdict::correct ? "correct" : "incorrect"; }

QAKind qa_kind_from_string(std::string_view s) {
    if (s == "factual_story") return QAKind::factual_story;
    if (s == "factual_timeline") return QAKind::factual_timeline;
    if (s == "inferential") return QAKind::inferential;
    throw SchemaError("field-type", "unknown QA kind '" + std::string(s) + "'");
}

QuestionClass question_class_from_string(std::string_view s) {
    if (s == "OwnQ") return QuestionClass::own_q;
    if (s == "CQ") return QuestionClass::cq;
    if (s == "MQ") return QuestionClass::mq;
    throw SchemaError("field-type", "unknown question class '" + std::string(s) + "'");
}

ChoiceMode choice_mode_from_string(std::string_view s) {
    if (s == "single") return ChoiceMode::single;
    if (s == "multi") return ChoiceMode::multi;
    throw SchemaError("field-type", "unknown choice mode '" + std::string(s) + "'");
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "correct") return Verdict::correct;
    if (s == "incorrect") return Verdict::incorrect;
    throw SchemaError("field-type", "unknown verdict '" + std::string(s) + "'");
}

void validate_item(const QAItem& item) {
    if (text::trim(item.question).empty()) throw SchemaError("missing-field", item.id + ": question is empty");
    if (is_factual(item.kind) && text::trim(item.source_quote).empty()) {
        throw SchemaError("missing-field", item.id + ": factual item without source_quote");
    }
    if (item.kind == QAKind::inferential && text::trim(item.reference_rationale).empty()) {
        throw SchemaError("missing-field", item.id + ": inferential item without reference_rationale");
    }
}

QuestionClass question_class(const QAItem& item, std::string_view answerer, std::string_view murderer) {
    if (item.owner_character == answerer) return QuestionClass::own_q;
    if (item.owner_character == murderer) return QuestionClass::mq;
    return QuestionClass::cq;
}

namespace {

std::string str(const json& j, const char* key, bool required = true) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) throw SchemaError("missing-field", std::string(key) + " is required");
        return {};
    }
    if (!it->is_string()) throw SchemaError("field-type", std::string(key) + " must be a string");
    return it->get<std::string>();
}

template <typename T, typename F>
std::vector<T> read_lines(std::string_view jsonl, F&& parse) {
    std::vector<T> out;
    std::size_t lineno = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object()) throw FormatError("line " + std::to_string(lineno) + ": expected an object");
        out.push_back(parse(j));
    }
    return out;
}

}  // namespace

ordered_json to_json(const QAItem& item) {
    ordered_json j;
    j["id"] = item.id;
    j["game"] = item.game;
    j["kind"] = to_string(item.kind);
    j["question"] = item.question;
    j["reference_answer"] = item.reference_answer;
    if (is_factual(item.kind)) {
        j["source_quote"] = item.source_quote;
    } else {
        j["reference_rationale"] = item.reference_rationale;
        j["choice"] = to_string(item.choice);
    }
    j["owner_character"] = item.owner_character;
    return j;
}

QAItem qa_item_from_json(const json& j) {
    QAItem item;
    item.id = str(j, "id");
    item.game = str(j, "game", false);
    item.kind = qa_kind_from_string(str(j, "kind"));
    item.question = str(j, "question");
    item.reference_answer = str(j, "reference_answer");
    item.source_quote = str(j, "source_quote", false);
    item.reference_rationale = str(j, "reference_rationale", false);
    item.owner_character = str(j, "owner_character", false);
    if (j.contains("choice")) item.choice = choice_mode_from_string(str(j, "choice"));
    validate_item(item);
    return item;
}

ordered_json to_json(const JudgedAnswer& a) {
    ordered_json j;
    j["item_id"] = a.item_id;
    j["answerer"] = a.answerer;
    j["kind"] = to_string(a.kind);
    j["question_class"] = a.question_class ? ordered_json(to_string(*a.question_class)) : ordered_json(nullptr);
    j["answer_text"] = a.answer_text;
    j["verdict"] = to_string(a.verdict);
    j["rationale_text"] = a.rationale_text ? ordered_json(*a.rationale_text) : ordered_json(nullptr);
    j["rationale_score"] = a.rationale_score ? ordered_json(*a.rationale_score) : ordered_json(nullptr);
    j["judge_parse_failed"] = a.judge_parse_failed;
    return j;
}

JudgedAnswer judged_answer_from_json(const json& j) {
    JudgedAnswer a;
    a.item_id = str(j, "item_id");
    a.answerer = str(j, "answerer");
    a.kind = qa_kind_from_string(str(j, "kind"));
    if (auto c = str(j, "question_class", false); !c.empty()) a.question_class = question_class_from_string(c);
    a.answer_text = str(j, "answer_text", false);
    a.verdict = verdict_from_string(str(j, "verdict"));
    if (auto it = j.find("rationale_text"); it != j.end() && it->is_string()) a.rationale_text = it->get<std::string>();
    if (auto it = j.find("rationale_score"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw SchemaError("field-type", "rationale_score must be an integer");
        const int s = it->get<int>();
        if (s < 1 || s > 5) throw SchemaError("field-range", "rationale_score must be in [1,5]");
        if (a.kind != QAKind::inferential) throw SchemaError("field-type", "rationale_score on a factual answer");
        a.rationale_score = s;
    }
    a.judge_parse_failed = j.value("judge_parse_failed", false);
    return a;
}

std::string write_jsonl(const std::vector<QAItem>& items) {
    std::string out;
    for (const auto& i : items) out += to_json(i).dump() + "\n";
    return out;
}

std::string write_jsonl(const std::vector<JudgedAnswer>& answers) {
    std::string out;
    for (const auto& a : answers) out += to_json(a).dump() + "\n";
    return out;
}

std::vector<QAItem> read_qa_items(std::string_view jsonl) {
    return read_lines<QAItem>(jsonl, [](const json& j) { return qa_item_from_json(j); });
}

std::vector<JudgedAnswer> read_judged_answers(std::string_view jsonl) {
    return read_lines<JudgedAnswer>(jsonl, [](const json& j) { return judged_answer_from_json(j); });
}

std::vector<QAItem> load_qa_bank(const std::filesystem::path& path) { return read_qa_items(read_text_file(path)); }

}  // namespace jubensha::eval
