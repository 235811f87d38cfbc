#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "jubensha/errors.hpp"

namespace jubensha::llm {

class TransportError : public Error {
public:
    using Error::Error;
};

// Retryable failure (rate limit, 5xx, dropped connection).
class TransientError : public TransportError {
public:
    using TransportError::TransportError;
};

class AuthError : public Error {
public:
    using Error::Error;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class EmptyBatch : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class MissingKey : public ParseError {
public:
    explicit MissingKey(std::string key)
        : ParseError("missing key: " + key), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct ChatRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.7;
    int max_output_tokens = 1024;
    std::string tag;
    // Values substituted into the prompt; the mock backend reads them instead of re-parsing text.
    std::map<std::string, std::string> bindings;
    // Keys the prompt asks the model to return, in order.
    std::vector<std::string> response_keys;
    // Distinguishes deliberate repeats of an otherwise identical request.
    std::uint32_t variant = 0;
};

struct ChatResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool approximate_usage = false;
    std::string model;
};

class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> values);  // throws PreconditionError if empty or non-finite

    std::size_t dimension() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    bool empty() const noexcept { return values_.empty(); }
    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

struct EmbeddingBatch {
    std::vector<EmbeddingVector> vectors;
    std::int64_t tokens = 0;
    bool approximate_usage = false;
};

// ceil(code points / 4), used when a provider omits usage.
std::int64_t approximate_tokens(std::string_view text);

}  // namespace jubensha::llm
