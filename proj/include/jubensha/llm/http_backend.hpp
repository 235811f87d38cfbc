#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include "jubensha/llm/backend.hpp"

namespace jubensha::llm {

struct HttpConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string chat_model = "gpt-3.5-turbo";
    std::string embedding_model = "text-embedding-ada-002";
    std::chrono::seconds timeout{120};

    // JUBENSHA_API_BASE, JUBENSHA_API_KEY, JUBENSHA_CHAT_MODEL, JUBENSHA_EMBED_MODEL override fields.
    void apply_environment();
    // JSON object with any of base_url, api_key, chat_model, embedding_model, timeout_seconds.
    void apply_file(const std::filesystem::path& path);
};

// OpenAI-compatible /chat/completions and /embeddings client.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpConfig config);

    ChatResponse complete(const ChatRequest& request) override;
    EmbeddingBatch embed(const std::vector<std::string>& texts) override;
    std::string chat_model() const override { return config_.chat_model; }
    std::string embedding_model() const override { return config_.embedding_model; }

private:
    std::string post(const std::string& path, const std::string& body);

    HttpConfig config_;
    std::string origin_;
    std::string path_prefix_;
};

}  // namespace jubensha::llm
