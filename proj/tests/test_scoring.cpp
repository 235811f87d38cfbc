#include <doctest.h>

#include "jubensha/agent/scoring.hpp"
#include "jubensha/errors.hpp"

using namespace jubensha;
using namespace jubensha::agent;

namespace {

AnswerCandidate cand(double acc, std::int64_t corrected, std::int64_t length) {
    AnswerCandidate c;
    c.accuracy = acc;
    c.corrected_fact_count = corrected;
    c.length = length;
    return c;
}

}  // namespace

TEST_CASE("score formula") {
    CHECK(score_answer(5.0 / 6.0, 5, 2, 400) == doctest::Approx(9.833333333333).epsilon(1e-12));
    CHECK(score_answer(0, 0, 0, 0) == 0.0);
    CHECK(score_answer(0, 0, 0, 200) == 1.0);
}

TEST_CASE("threshold conjunction") {
    CHECK(passes_threshold(cand(0.75, 4, 360), VerificationPolicy::host()));
    CHECK_FALSE(passes_threshold(cand(0.9, 0, 500), VerificationPolicy::player()));
    CHECK_FALSE(passes_threshold(cand(0, 0, 1000), VerificationPolicy::host()));
    CHECK_FALSE(passes_threshold(cand(0, 0, 1000), VerificationPolicy::player()));
}

TEST_CASE("candidates from verdicts") {
    const auto c = build_candidate("At 18:10 I met Hale. I like tea.",
                                   {make_fact("At 18:10 I met Hale."), make_fact("I like tea.")}, {true, true},
                                   LengthUnit::auto_detect);
    CHECK(c.corrected_fact_count == 2);
    CHECK(c.time_matched_count == 1);
    CHECK(c.accuracy == 1.0);
    CHECK(c.length == 8);
    CHECK(c.score == doctest::Approx(1 + 2 + 1 + 8 / 200.0));
    const auto empty = build_candidate("Hello everyone", {}, {}, LengthUnit::words);
    CHECK(empty.accuracy == 0.0);
    CHECK_THROWS_AS(build_candidate("x", {make_fact("a")}, {}, LengthUnit::words), PreconditionError);
}

TEST_CASE("best candidate keeps the earliest maximum") {
    std::vector<AnswerCandidate> v(3);
    v[0].score = 2.1;
    v[1].score = 5.0;
    v[2].score = 4.2;
    CHECK(best_candidate(v) == 1);
    v[2].score = 5.0;
    CHECK(best_candidate(v) == 1);
    CHECK_THROWS_AS(best_candidate({}), PreconditionError);
}

TEST_CASE("policy validation") {
    CHECK_NOTHROW(VerificationPolicy::host(3).validate());
    CHECK_THROWS_AS((VerificationPolicy{1.5, 0, 0, 1}).validate(), PreconditionError);
    CHECK_THROWS_AS((VerificationPolicy{0.5, -1, 0, 1}).validate(), PreconditionError);
    CHECK_THROWS_AS((VerificationPolicy{0.5, 0, 0, 0}).validate(), PreconditionError);
}
