#include <doctest.h>

#include "jubensha/errors.hpp"
#include "jubensha/llm/ledger.hpp"
#include "support.hpp"

using namespace jubensha;
using namespace jubensha::llm;

TEST_CASE("decimal parsing is exact") {
    CHECK(parse_decimal_nano("0.0015") == 1'500'000);
    CHECK(parse_decimal_nano("2") == 2'000'000'000);
    CHECK_THROWS_AS(parse_decimal_nano("0.0000000001"), FormatError);
    CHECK_THROWS_AS(parse_decimal_nano("-1"), FormatError);
    CHECK_THROWS_AS(parse_decimal_nano(""), FormatError);
}

TEST_CASE("money rounds half up") {
    CHECK(Money{5'000'000'000}.to_minor_units(2) == 1);    // 0.005
    CHECK(Money{4'999'999'999}.to_minor_units(2) == 0);
    CHECK(Money{1'234'500'000'000}.format(2) == "1.23");
    CHECK(Money{1'235'000'000'000}.format(2) == "1.24");
    CHECK(Money{1'000'000}.format(6) == "0.000001");
    CHECK(Money{0}.format(0) == "0");
}

TEST_CASE("price lookup order") {
    PriceTable t;
    t.rates["vote"] = {1, 1};
    t.rates["mock-chat"] = {2, 2};
    t.rates["*"] = {3, 3};
    CHECK(t.lookup("vote", "mock-chat").prompt_nano_per_1k == 1);
    CHECK(t.lookup("answer", "mock-chat").prompt_nano_per_1k == 2);
    CHECK(t.lookup("answer", "other").prompt_nano_per_1k == 3);
    CHECK(PriceTable{}.lookup("x", "y") == Rate{});
}

TEST_CASE("price table json round trip") {
    const auto t = testing::fixture_prices();
    CHECK(t.minor_unit_digits == 6);
    CHECK(t.lookup("x", "mock-chat").prompt_nano_per_1k == 1'500'000);
    CHECK(PriceTable::from_json_text(t.to_json_text()) == t);
}

TEST_CASE("ledger totals") {
    PriceTable t;
    t.rates["*"] = {parse_decimal_nano("0.001"), parse_decimal_nano("0.002")};
    CostLedger ledger(t);
    ledger.record_chat("answer", "m", 1000, 500, false);
    ledger.record_chat("answer", "m", 10, 0, true);
    ledger.record_embedding("embed", "e", 2000, false);
    // (1010 + 2000) * 0.001/1000 + 500 * 0.002/1000
    CHECK(ledger.total_cost() == Money{(3010 * 1'000'000LL) + 500 * 2'000'000LL});
    const auto u = ledger.usage("answer");
    CHECK(u.calls == 2);
    CHECK(u.approximate_calls == 1);
    CHECK(u.prompt_tokens == 1010);
    CHECK(ledger.calls().size() == 3);
    CHECK_THROWS_AS(ledger.record_chat("x", "m", -1, 0, false), PreconditionError);

    CostLedger restored(t);
    restored.restore(ledger.calls());
    CHECK(restored.total_cost() == ledger.total_cost());
    CHECK(restored.usage_by_tag_model() == ledger.usage_by_tag_model());
}
