#include "jubensha/agent/scoring.hpp"

#include "jubensha/errors.hpp"

namespace jubensha::agent {

VerificationPolicy VerificationPolicy::host(int max_attempts) { return {0.7, 4, 350, max_attempts}; }

VerificationPolicy VerificationPolicy::player(int max_attempts) { return {0.6, 1, 30, max_attempts}; }

void VerificationPolicy::validate() const {
    if (!(accuracy_threshold >= 0.0 && accuracy_threshold <= 1.0)) {
        throw PreconditionError("accuracy threshold must be within [0, 1]");
    }
    if (min_corrected_facts < 0 || min_response_length < 0) {
        throw PreconditionError("policy minimums must be non-negative");
    }
    if (max_attempts < 1) throw PreconditionError("max_attempts must be at least 1");
}

double score_answer(double accuracy, std::int64_t corrected, std::int64_t time_matched, std::int64_t length) {
    return accuracy + static_cast<double>(corrected) + static_cast<double>(time_matched) +
           static_cast<double>(length) / 200.0;
}

double score_answer(const AnswerCandidate& c) {
    return score_answer(c.accuracy, c.corrected_fact_count, c.time_matched_count, c.length);
}

AnswerCandidate build_candidate(std::string text, std::vector<TimelineFact> facts, std::vector<bool> verdicts,
                                LengthUnit unit) {
    if (facts.size() != verdicts.size()) throw PreconditionError("facts and verdicts differ in size");
    AnswerCandidate c;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        if (!verdicts[i]) continue;
        ++c.corrected_fact_count;
        if (facts[i].has_time_reference) ++c.time_matched_count;
    }
    c.accuracy = facts.empty() ? 0.0
                               : static_cast<double>(c.corrected_fact_count) / static_cast<double>(facts.size());
    c.length_unit = resolve_length_unit(text, unit);
    c.length = static_cast<std::int64_t>(response_length(text, c.length_unit));
    c.score = score_answer(c.accuracy, c.corrected_fact_count, c.time_matched_count, c.length);
    c.text = std::move(text);
    c.facts = std::move(facts);
    c.verdicts = std::move(verdicts);
    return c;
}

bool passes_threshold(const AnswerCandidate& c, const VerificationPolicy& policy) {
    return c.accuracy >= policy.accuracy_threshold && c.corrected_fact_count >= policy.min_corrected_facts &&
           c.length >= policy.min_response_length;
}

std::size_t best_candidate(const std::vector<AnswerCandidate>& candidates) {
    if (candidates.empty()) throw PreconditionError("no candidates to choose from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (candidates[i].score > candidates[best].score) best = i;
    }
    return best;
}

}  // namespace jubensha::agent
