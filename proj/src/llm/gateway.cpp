#include "jubensha/llm/gateway.hpp"

#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

#include "jubensha/text.hpp"

namespace jubensha::llm {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw PreconditionError("embedding must have positive dimension");
    for (double v : values_) {
        if (!std::isfinite(v)) throw PreconditionError("embedding contains a non-finite value");
    }
}

std::int64_t approximate_tokens(std::string_view text) {
    const auto n = static_cast<std::int64_t>(text::code_point_count(text));
    return (n + 3) / 4;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options, PriceTable prices)
    : backend_(std::move(backend)), options_(std::move(options)), ledger_(std::move(prices)) {
    if (!backend_) throw PreconditionError("gateway requires a backend");
    if (options_.max_retries < 0) throw PreconditionError("max_retries must be >= 0");
    if (!options_.sleeper) {
        options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

void Gateway::check_budget() const {
    if (!options_.budget_cap) return;
    const Money spent = ledger_.total_cost();
    if (spent >= *options_.budget_cap) {
        const int digits = ledger_.prices().minor_unit_digits;
        throw BudgetExceeded("budget cap " + options_.budget_cap->format(digits) + " reached (spent " +
                             spent.format(digits) + ")");
    }
}

template <typename F>
auto Gateway::with_retries(const std::string& what, F&& call) -> decltype(call()) {
    auto delay = options_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        check_budget();
        try {
            return call();
        } catch (const TransientError& e) {
            if (attempt >= options_.max_retries) {
                throw TransportError(what + " failed after " + std::to_string(attempt + 1) +
                                     " attempts: " + e.what());
            }
            spdlog::warn("{} transient failure (attempt {}): {}", what, attempt + 1, e.what());
            options_.sleeper(delay);
            delay = std::min(options_.max_backoff,
                             std::chrono::milliseconds(static_cast<long long>(
                                 static_cast<double>(delay.count()) * options_.backoff_multiplier)));
        }
    }
}

ChatResponse Gateway::chat(const ChatRequest& request) {
    if (text::trim(request.user_text).empty()) throw PreconditionError("chat request has empty user_text");
    if (request.temperature < 0) throw PreconditionError("temperature must be >= 0");
    if (request.max_output_tokens <= 0) throw PreconditionError("max_output_tokens must be positive");
    const std::string tag = request.tag.empty() ? "untagged" : request.tag;
    ChatResponse resp = with_retries("chat[" + tag + "]", [&] { return backend_->complete(request); });
    if (resp.prompt_tokens < 0 || resp.completion_tokens < 0) {
        throw TransportError("provider reported negative token usage");
    }
    if (resp.model.empty()) resp.model = backend_->chat_model();
    ledger_.record_chat(tag, resp.model, resp.prompt_tokens, resp.completion_tokens, resp.approximate_usage);
    return resp;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts, const std::string& tag) {
    if (texts.empty()) throw EmptyBatch("embed called with an empty batch");
    for (const auto& t : texts) {
        if (t.empty()) throw PreconditionError("embed called with an empty text");
    }

    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::string> pending;
    std::vector<std::size_t> pending_index;
    {
        std::lock_guard lock(cache_mu_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (options_.cache_embeddings) {
                if (auto it = cache_.find(texts[i]); it != cache_.end()) {
                    out[i] = it->second;
                    continue;
                }
            }
            pending.push_back(texts[i]);
            pending_index.push_back(i);
        }
    }
    if (pending.empty()) return out;

    EmbeddingBatch batch = with_retries("embed[" + tag + "]", [&] { return backend_->embed(pending); });
    if (batch.vectors.size() != pending.size()) {
        throw TransportError("provider returned " + std::to_string(batch.vectors.size()) +
                             " embeddings for " + std::to_string(pending.size()) + " texts");
    }
    ledger_.record_embedding(tag, backend_->embedding_model(), batch.tokens, batch.approximate_usage);

    std::lock_guard lock(cache_mu_);
    for (std::size_t j = 0; j < pending.size(); ++j) {
        const std::size_t dim = batch.vectors[j].dimension();
        const std::size_t expected = options_.embedding_dimension.value_or(seen_dimension_.value_or(dim));
        if (dim != expected) {
            throw DimensionMismatch("embedding dimension " + std::to_string(dim) + " != expected " +
                                    std::to_string(expected));
        }
        seen_dimension_ = dim;
        out[pending_index[j]] = batch.vectors[j];
        if (options_.cache_embeddings) cache_.emplace(pending[j], batch.vectors[j]);
    }
    return out;
}

EmbeddingVector Gateway::embed_one(const std::string& text, const std::string& tag) {
    return embed(std::vector<std::string>{text}, tag).front();
}

}  // namespace jubensha::llm
