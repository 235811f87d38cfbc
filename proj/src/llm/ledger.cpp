#include "jubensha/llm/ledger.hpp"

#include <cctype>
#include <cmath>

#include <json.hpp>

#include "jubensha/errors.hpp"

namespace jubensha::llm {

std::int64_t Money::to_minor_units(int minor_digits) const {
    if (minor_digits < 0 || minor_digits > 12) throw PreconditionError("minor_digits out of range");
    std::int64_t div = 1;
    for (int i = 0; i < 12 - minor_digits; ++i) div *= 10;
    const std::int64_t q = pico / div;
    const std::int64_t r = pico % div;
    if (pico >= 0) return r * 2 >= div ? q + 1 : q;
    return -r * 2 >= div ? q - 1 : q;
}

std::string Money::format(int minor_digits) const {
    std::int64_t units = to_minor_units(minor_digits);
    const bool negative = units < 0;
    if (negative) units = -units;
    std::string digits = std::to_string(units);
    if (minor_digits > 0) {
        if (static_cast<int>(digits.size()) <= minor_digits) {
            digits.insert(0, static_cast<std::size_t>(minor_digits + 1) - digits.size(), '0');
        }
        digits.insert(digits.size() - static_cast<std::size_t>(minor_digits), ".");
    }
    return negative ? "-" + digits : digits;
}

std::int64_t parse_decimal_nano(std::string_view text) {
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    bool any = false;
    for (char c : text) {
        if (c == '.') {
            if (seen_dot) throw FormatError("bad decimal: " + std::string(text));
            seen_dot = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) throw FormatError("bad decimal: " + std::string(text));
        any = true;
        if (seen_dot) {
            if (++frac_digits > 9) throw FormatError("more than 9 decimals: " + std::string(text));
            frac = frac * 10 + (c - '0');
        } else {
            whole = whole * 10 + (c - '0');
            if (whole > 9'000'000'000LL) throw FormatError("decimal too large: " + std::string(text));
        }
    }
    if (!any) throw FormatError("bad decimal: " + std::string(text));
    for (int i = frac_digits; i < 9; ++i) frac *= 10;
    return whole * 1'000'000'000LL + frac;
}

Money money_from_decimal(std::string_view text) { return Money{parse_decimal_nano(text) * 1000}; }

Rate PriceTable::lookup(std::string_view tag, std::string_view model) const {
    if (auto it = rates.find(std::string(tag)); it != rates.end()) return it->second;
    if (auto it = rates.find(std::string(model)); it != rates.end()) return it->second;
    if (auto it = rates.find("*"); it != rates.end()) return it->second;
    return {};
}

namespace {

std::int64_t rate_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) return 0;
    if (it->is_string()) return parse_decimal_nano(it->get<std::string>());
    if (it->is_number()) {
        // Render through the shortest round-trip form so 0.0015 stays exact.
        const std::string s = it->dump();
        if (s.find_first_of("eE-") == std::string::npos) return parse_decimal_nano(s);
        const double v = it->get<double>();
        if (v < 0) throw SchemaError("field-type", std::string(key) + " must be non-negative");
        return static_cast<std::int64_t>(std::llround(v * 1e9));
    }
    throw SchemaError("field-type", std::string(key) + " must be a decimal string or number");
}

std::string nano_to_decimal(std::int64_t nano) {
    std::string s = std::to_string(nano / 1'000'000'000LL);
    std::int64_t frac = nano % 1'000'000'000LL;
    if (frac == 0) return s;
    std::string f = std::to_string(frac);
    f.insert(0, 9 - f.size(), '0');
    while (!f.empty() && f.back() == '0') f.pop_back();
    return s + "." + f;
}

}  // namespace

PriceTable PriceTable::from_json_text(std::string_view document) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("malformed price table: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("price table must be an object");
    PriceTable t;
    t.currency = j.value("currency", std::string("USD"));
    t.minor_unit_digits = j.value("minor_unit_digits", 2);
    if (auto it = j.find("rates"); it != j.end()) {
        if (!it->is_object()) throw SchemaError("field-type", "rates must be an object");
        for (auto r = it->begin(); r != it->end(); ++r) {
            t.rates[r.key()] = Rate{rate_field(r.value(), "prompt_per_1k"),
                                    rate_field(r.value(), "completion_per_1k")};
        }
    }
    return t;
}

std::string PriceTable::to_json_text() const {
    nlohmann::ordered_json j;
    j["currency"] = currency;
    j["minor_unit_digits"] = minor_unit_digits;
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rates) {
        r[k] = {{"prompt_per_1k", nano_to_decimal(v.prompt_nano_per_1k)},
                {"completion_per_1k", nano_to_decimal(v.completion_nano_per_1k)}};
    }
    j["rates"] = r;
    return j.dump(2);
}

CostLedger::CostLedger(PriceTable prices) : prices_(std::move(prices)) {}

void CostLedger::record_chat(const std::string& tag, const std::string& model, std::int64_t prompt_tokens,
                             std::int64_t completion_tokens, bool approximate) {
    if (prompt_tokens < 0 || completion_tokens < 0) throw PreconditionError("negative token count");
    std::lock_guard lock(mu_);
    auto& u = usage_[{tag, model}];
    u.prompt_tokens += prompt_tokens;
    u.completion_tokens += completion_tokens;
    u.calls += 1;
    u.approximate_calls += approximate ? 1 : 0;
    calls_.push_back({calls_.size(), CallKind::chat, tag, model, prompt_tokens, completion_tokens, 0, approximate});
}

void CostLedger::record_embedding(const std::string& tag, const std::string& model, std::int64_t tokens,
                                  bool approximate) {
    if (tokens < 0) throw PreconditionError("negative token count");
    std::lock_guard lock(mu_);
    auto& u = usage_[{tag, model}];
    u.embedding_tokens += tokens;
    u.calls += 1;
    u.approximate_calls += approximate ? 1 : 0;
    calls_.push_back({calls_.size(), CallKind::embedding, tag, model, 0, 0, tokens, approximate});
}

TokenUsage CostLedger::usage(const std::string& tag) const {
    std::lock_guard lock(mu_);
    TokenUsage total;
    for (const auto& [key, u] : usage_) {
        if (key.first != tag) continue;
        total.prompt_tokens += u.prompt_tokens;
        total.completion_tokens += u.completion_tokens;
        total.embedding_tokens += u.embedding_tokens;
        total.calls += u.calls;
        total.approximate_calls += u.approximate_calls;
    }
    return total;
}

std::map<std::pair<std::string, std::string>, TokenUsage> CostLedger::usage_by_tag_model() const {
    std::lock_guard lock(mu_);
    return usage_;
}

std::vector<CallRecord> CostLedger::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

Money CostLedger::cost_of(const TokenUsage& u, const Rate& r) {
    // tokens/1000 * rate_nano * 1e-9 == tokens * rate_nano * 1e-12
    return Money{(u.prompt_tokens + u.embedding_tokens) * r.prompt_nano_per_1k +
                 u.completion_tokens * r.completion_nano_per_1k};
}

Money CostLedger::total_cost() const {
    std::lock_guard lock(mu_);
    Money total;
    for (const auto& [key, u] : usage_) total += cost_of(u, prices_.lookup(key.first, key.second));
    return total;
}

void CostLedger::restore(std::vector<CallRecord> calls) {
    std::lock_guard lock(mu_);
    usage_.clear();
    calls_.clear();
    for (auto& c : calls) {
        auto& u = usage_[{c.tag, c.model}];
        u.prompt_tokens += c.prompt_tokens;
        u.completion_tokens += c.completion_tokens;
        u.embedding_tokens += c.embedding_tokens;
        u.calls += 1;
        u.approximate_calls += c.approximate ? 1 : 0;
        c.index = calls_.size();
        calls_.push_back(std::move(c));
    }
}

}  // namespace jubensha::llm
