#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "jubensha/llm/backend.hpp"
#include "jubensha/llm/ledger.hpp"

namespace jubensha::llm {

struct GatewayOptions {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double backoff_multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};
    std::optional<Money> budget_cap;
    std::optional<std::size_t> embedding_dimension;
    // Repeated texts are embedded once per gateway.
    bool cache_embeddings = true;
    std::function<void(std::chrono::milliseconds)> sleeper;
};

class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {}, PriceTable prices = {});

    ChatResponse chat(const ChatRequest& request);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       const std::string& tag = "embed");
    EmbeddingVector embed_one(const std::string& text, const std::string& tag = "embed");

    CostLedger& ledger() noexcept { return ledger_; }
    const CostLedger& ledger() const noexcept { return ledger_; }
    std::string chat_model() const { return backend_->chat_model(); }
    std::string embedding_model() const { return backend_->embedding_model(); }
    Backend& backend() noexcept { return *backend_; }
    const GatewayOptions& options() const noexcept { return options_; }

private:
    void check_budget() const;
    template <typename F>
    auto with_retries(const std::string& what, F&& call) -> decltype(call());

    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    CostLedger ledger_;
    mutable std::mutex cache_mu_;
    std::unordered_map<std::string, EmbeddingVector> cache_;
    std::optional<std::size_t> seen_dimension_;
};

}  // namespace jubensha::llm
