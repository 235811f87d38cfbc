#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jubensha::llm {

// Amount of money in units of 1e-12 of the currency.
struct Money {
    std::int64_t pico = 0;

    auto operator<=>(const Money&) const = default;
    Money& operator+=(Money other) {
        pico += other.pico;
        return *this;
    }
    friend Money operator+(Money a, Money b) { return a += b; }

    // Rounded half-up to `minor_digits` decimals (2 for cents).
    std::int64_t to_minor_units(int minor_digits) const;
    std::string format(int minor_digits) const;
};

// Parses a non-negative decimal like "0.0015" exactly; more than 9 fractional digits is rejected.
std::int64_t parse_decimal_nano(std::string_view text);
Money money_from_decimal(std::string_view text);  // currency units, exact to 1e-9

// Rates in units of 1e-9 currency per 1000 tokens.
struct Rate {
    std::int64_t prompt_nano_per_1k = 0;
    std::int64_t completion_nano_per_1k = 0;
    bool operator==(const Rate&) const = default;
};

struct PriceTable {
    std::string currency = "USD";
    int minor_unit_digits = 2;
    std::map<std::string, Rate> rates;  // keyed by tag or model id; "*" is the default

    // Tag first, then model, then "*", else zero.
    Rate lookup(std::string_view tag, std::string_view model) const;
    static PriceTable from_json_text(std::string_view document);
    std::string to_json_text() const;
    bool operator==(const PriceTable&) const = default;
};

enum class CallKind { chat, embedding };

struct CallRecord {
    std::uint64_t index = 0;
    CallKind kind = CallKind::chat;
    std::string tag;
    std::string model;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t embedding_tokens = 0;
    bool approximate = false;
    bool operator==(const CallRecord&) const = default;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t embedding_tokens = 0;
    std::int64_t calls = 0;
    std::int64_t approximate_calls = 0;
    bool operator==(const TokenUsage&) const = default;
};

class CostLedger {
public:
    explicit CostLedger(PriceTable prices = {});

    void record_chat(const std::string& tag, const std::string& model, std::int64_t prompt_tokens,
                     std::int64_t completion_tokens, bool approximate);
    void record_embedding(const std::string& tag, const std::string& model, std::int64_t tokens,
                          bool approximate);

    TokenUsage usage(const std::string& tag) const;
    // Keyed by (tag, model).
    std::map<std::pair<std::string, std::string>, TokenUsage> usage_by_tag_model() const;
    std::vector<CallRecord> calls() const;
    Money total_cost() const;
    const PriceTable& prices() const { return prices_; }

    // Restores a snapshot; used when reloading a run.
    void restore(std::vector<CallRecord> calls);

private:
    static Money cost_of(const TokenUsage& u, const Rate& r);

    PriceTable prices_;
    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::string>, TokenUsage> usage_;
    std::vector<CallRecord> calls_;
};

}  // namespace jubensha::llm
