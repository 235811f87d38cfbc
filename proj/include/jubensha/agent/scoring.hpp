#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jubensha/agent/timeline.hpp"

namespace jubensha::agent {

struct VerificationPolicy {
    double accuracy_threshold = 0.0;
    std::int64_t min_corrected_facts = 0;
    std::int64_t min_response_length = 0;
    int max_attempts = 1;

    static VerificationPolicy host(int max_attempts = 1);
    static VerificationPolicy player(int max_attempts = 1);

    // Throws PreconditionError unless the threshold is in [0, 1], the
    // minimums are non-negative and max_attempts is at least 1.
    void validate() const;

    bool operator==(const VerificationPolicy&) const = default;
};

struct AnswerCandidate {
    std::string text;
    std::vector<TimelineFact> facts;
    std::vector<bool> verdicts;
    double accuracy = 0.0;
    std::int64_t corrected_fact_count = 0;
    std::int64_t time_matched_count = 0;
    std::int64_t length = 0;
    LengthUnit length_unit = LengthUnit::words;
    double score = 0.0;
};

// accuracy + corrected + time_matched + length / 200
double score_answer(double accuracy, std::int64_t corrected, std::int64_t time_matched, std::int64_t length);
double score_answer(const AnswerCandidate& c);

// Facts and verdicts must have equal size. Accuracy is 0 when there are no facts.
AnswerCandidate build_candidate(std::string text, std::vector<TimelineFact> facts, std::vector<bool> verdicts,
                                LengthUnit unit);

bool passes_threshold(const AnswerCandidate& c, const VerificationPolicy& policy);

// Index of the highest score; the earliest wins ties. Empty input throws.
std::size_t best_candidate(const std::vector<AnswerCandidate>& candidates);

}  // namespace jubensha::agent
