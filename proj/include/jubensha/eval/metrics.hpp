#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jubensha/eval/qa.hpp"
#include "jubensha/eval/similarity.hpp"
#include "jubensha/game/game.hpp"

namespace jubensha::eval {

// Everything measured for one pipeline configuration, possibly over several games.
struct PipelineResults {
    std::string pipeline;
    std::vector<JudgedAnswer> judged;
    std::vector<game::GameOutcome> outcomes;
    std::vector<SimilarityScores> similarities;
};

struct ClassCount {
    std::int64_t correct = 0;
    std::int64_t total = 0;

    std::optional<double> accuracy() const;
    bool operator==(const ClassCount&) const = default;
};

struct MetricRow {
    std::string pipeline;
    ClassCount own_q;
    ClassCount cq;
    ClassCount mq;
    ClassCount inferential;
    std::int64_t informed_correct = 0;
    std::int64_t games = 0;
    std::int64_t civilian_wins = 0;
    // Games without a single valid memoryless ballot are left out of the average.
    std::int64_t games_with_valid_ballots = 0;
    double murderer_id_sum = 0;
    std::optional<SimilarityScores> similarity;

    std::optional<double> own_q_acc() const { return own_q.accuracy(); }
    std::optional<double> cq_acc() const { return cq.accuracy(); }
    std::optional<double> mq_acc() const { return mq.accuracy(); }
    // Pooled over CQ and MQ items.
    std::optional<double> others_avg_acc() const;
    std::optional<double> overall_inferential_acc() const { return inferential.accuracy(); }
    std::optional<double> informed_inferential_acc() const;
    std::optional<double> civilian_win_rate() const;
    std::optional<double> murderer_id_acc() const;

    bool operator==(const MetricRow&) const = default;
};

struct MetricReport {
    std::string judge_model;
    std::vector<MetricRow> rows;

    bool operator==(const MetricReport&) const = default;
};

// Throws EmptyInput when there is nothing to aggregate.
MetricReport aggregate_report(const std::vector<PipelineResults>& results, std::string judge_model);

nlohmann::ordered_json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& j);

}  // namespace jubensha::eval
