#include "jubensha/eval/metrics.hpp"

#include <spdlog/spdlog.h>

#include "jubensha/errors.hpp"

namespace jubensha::eval {

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> ClassCount::accuracy() const { return ratio(correct, total); }

std::optional<double> MetricRow::others_avg_acc() const { return ratio(cq.correct + mq.correct, cq.total + mq.total); }
std::optional<double> MetricRow::informed_inferential_acc() const { return ratio(informed_correct, inferential.total); }
std::optional<double> MetricRow::civilian_win_rate() const { return ratio(civilian_wins, games); }

std::optional<double> MetricRow::murderer_id_acc() const {
    if (games_with_valid_ballots == 0) return std::nullopt;
    return murderer_id_sum / static_cast<double>(games_with_valid_ballots);
}

MetricReport aggregate_report(const std::vector<PipelineResults>& results, std::string judge_model) {
    if (results.empty()) throw EmptyInput("aggregate_report needs at least one pipeline");
    MetricReport report;
    report.judge_model = std::move(judge_model);
    for (const auto& r : results) {
        if (r.judged.empty() && r.outcomes.empty() && r.similarities.empty()) {
            throw EmptyInput("pipeline " + r.pipeline + " has no results");
        }
        MetricRow row;
        row.pipeline = r.pipeline;
        for (const auto& j : r.judged) {
            const bool ok = j.verdict == Verdict::correct;
            if (j.kind == QAKind::inferential) {
                row.inferential.total += 1;
                row.inferential.correct += ok;
                row.informed_correct += j.informed();
                continue;
            }
            if (!j.question_class) throw PreconditionError("factual answer " + j.item_id + " has no question class");
            ClassCount& c = *j.question_class == QuestionClass::own_q ? row.own_q
                            : *j.question_class == QuestionClass::cq  ? row.cq
                                                                      : row.mq;
            c.total += 1;
            c.correct += ok;
        }
        for (const auto& o : r.outcomes) {
            row.games += 1;
            row.civilian_wins += o.in_game_winner == game::Winner::civilians;
            try {
                row.murderer_id_sum += game::murderer_identification_accuracy(o, o.murderer);
                row.games_with_valid_ballots += 1;
            } catch (const game::NoValidBallots&) {
                spdlog::warn("{}: a game has no valid memoryless ballots, left out of murderer-ID accuracy", r.pipeline);
            } catch (const PreconditionError&) {
                spdlog::warn("{}: a game has no memoryless ballots, left out of murderer-ID accuracy", r.pipeline);
            }
        }
        if (!r.similarities.empty()) {
            SimilarityScores s;
            for (const auto& x : r.similarities) {
                s.embedding_cosine += x.embedding_cosine;
                s.tfidf_cosine += x.tfidf_cosine;
                s.trigram_jaccard += x.trigram_jaccard;
            }
            const double n = static_cast<double>(r.similarities.size());
            s.embedding_cosine /= n;
            s.tfidf_cosine /= n;
            s.trigram_jaccard /= n;
            row.similarity = s;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

nlohmann::ordered_json counts(const ClassCount& c) { return {{"correct", c.correct}, {"total", c.total}}; }

ClassCount counts_from(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("field-type", "class counts must be an object");
    ClassCount c{j.at("correct").get<std::int64_t>(), j.at("total").get<std::int64_t>()};
    if (c.correct < 0 || c.total < 0 || c.correct > c.total) throw SchemaError("field-range", "bad class counts");
    return c;
}

nlohmann::ordered_json opt(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    j["judge_model"] = report.judge_model;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["pipeline"] = r.pipeline;
        row["own_q_acc"] = opt(r.own_q_acc());
        row["cq_acc"] = opt(r.cq_acc());
        row["mq_acc"] = opt(r.mq_acc());
        row["others_avg_acc"] = opt(r.others_avg_acc());
        row["overall_inferential_acc"] = opt(r.overall_inferential_acc());
        row["informed_inferential_acc"] = opt(r.informed_inferential_acc());
        row["civilian_win_rate"] = opt(r.civilian_win_rate());
        row["murderer_id_acc"] = opt(r.murderer_id_acc());
        if (r.similarity) {
            row["similarity"] = {{"embedding_cosine", r.similarity->embedding_cosine},
                                 {"tfidf_cosine", r.similarity->tfidf_cosine},
                                 {"trigram_jaccard", r.similarity->trigram_jaccard}};
        } else {
            row["similarity"] = nullptr;
        }
        row["counts"] = {{"own_q", counts(r.own_q)},
                         {"cq", counts(r.cq)},
                         {"mq", counts(r.mq)},
                         {"inferential", counts(r.inferential)},
                         {"informed_correct", r.informed_correct},
                         {"games", r.games},
                         {"civilian_wins", r.civilian_wins},
                         {"games_with_valid_ballots", r.games_with_valid_ballots},
                         {"murderer_id_sum", r.murderer_id_sum}};
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    try {
        MetricReport report;
        report.judge_model = j.at("judge_model").get<std::string>();
        for (const auto& row : j.at("rows")) {
            MetricRow r;
            r.pipeline = row.at("pipeline").get<std::string>();
            const auto& c = row.at("counts");
            r.own_q = counts_from(c.at("own_q"));
            r.cq = counts_from(c.at("cq"));
            r.mq = counts_from(c.at("mq"));
            r.inferential = counts_from(c.at("inferential"));
            r.informed_correct = c.at("informed_correct").get<std::int64_t>();
            r.games = c.at("games").get<std::int64_t>();
            r.civilian_wins = c.at("civilian_wins").get<std::int64_t>();
            r.games_with_valid_ballots = c.at("games_with_valid_ballots").get<std::int64_t>();
            r.murderer_id_sum = c.at("murderer_id_sum").get<double>();
            if (const auto& s = row.at("similarity"); !s.is_null()) {
                r.similarity = SimilarityScores{s.at("embedding_cosine").get<double>(), s.at("tfidf_cosine").get<double>(),
                                                s.at("trigram_jaccard").get<double>()};
            }
            report.rows.push_back(std::move(r));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("field-type", std::string("malformed metric report: ") + e.what());
    }
}

}  // namespace jubensha::eval
