#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace jubensha::eval {

enum class QAKind { factual_story, factual_timeline, inferential };
enum class QuestionClass { own_q, cq, mq };
enum class ChoiceMode { single, multi };
enum class Verdict { correct, incorrect };

std::string to_string(QAKind k);
std::string to_string(QuestionClass c);  // "OwnQ", "CQ", "MQ"
std::string to_string(ChoiceMode m);
std::string to_string(Verdict v);
QAKind qa_kind_from_string(std::string_view s);
QuestionClass question_class_from_string(std::string_view s);
ChoiceMode choice_mode_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);

constexpr bool is_factual(QAKind k) { return k != QAKind::inferential; }

struct QAItem {
    std::string id;
    std::string game;
    QAKind kind = QAKind::factual_story;
    std::string question;
    std::string reference_answer;
    std::string source_quote;
    std::string reference_rationale;
    std::string owner_character;
    ChoiceMode choice = ChoiceMode::single;

    bool operator==(const QAItem&) const = default;
};

// Throws SchemaError when a factual item lacks a source or an inferential item lacks a rationale.
void validate_item(const QAItem& item);

QuestionClass question_class(const QAItem& item, std::string_view answerer, std::string_view murderer);

struct JudgedAnswer {
    std::string item_id;
    std::string answerer;
    QAKind kind = QAKind::factual_story;
    std::optional<QuestionClass> question_class;
    std::string answer_text;
    Verdict verdict = Verdict::incorrect;
    std::optional<std::string> rationale_text;
    std::optional<int> rationale_score;
    // The judge reply could not be read; the verdict defaulted to incorrect.
    bool judge_parse_failed = false;

    bool informed() const { return verdict == Verdict::correct && rationale_score && *rationale_score >= 4; }
    bool operator==(const JudgedAnswer&) const = default;
};

nlohmann::ordered_json to_json(const QAItem& item);
QAItem qa_item_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const JudgedAnswer& a);
JudgedAnswer judged_answer_from_json(const nlohmann::json& j);

std::string write_jsonl(const std::vector<QAItem>& items);
std::string write_jsonl(const std::vector<JudgedAnswer>& answers);
std::vector<QAItem> read_qa_items(std::string_view jsonl);
std::vector<JudgedAnswer> read_judged_answers(std::string_view jsonl);
std::vector<QAItem> load_qa_bank(const std::filesystem::path& path);

}  // namespace jubensha::eval
