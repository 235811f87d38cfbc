#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "jubensha/llm/backend.hpp"

namespace jubensha::llm {

// Receives the request and a seed derived from (backend seed, tag, prompt text, variant).
using Responder = std::function<std::string(const ChatRequest&, std::uint64_t seed)>;

// Deterministic offline backend. Lookup order per tag: canned responses, responder, fallback.
class MockBackend : public Backend {
public:
    explicit MockBackend(std::uint64_t seed = 0, std::size_t embedding_dimension = 64);

    // Each <tag>.txt holds one or more responses separated by a line containing only "---".
    void load_fixture_dir(const std::filesystem::path& dir);
    void set_canned(const std::string& tag, std::vector<std::string> responses);
    void set_responder(const std::string& tag, Responder responder);
    void set_fallback(Responder responder);

    ChatResponse complete(const ChatRequest& request) override;
    EmbeddingBatch embed(const std::vector<std::string>& texts) override;
    std::string chat_model() const override { return "mock-chat"; }
    std::string embedding_model() const override { return "mock-embed"; }

    std::uint64_t request_seed(const ChatRequest& request) const;
    EmbeddingVector embed_text(const std::string& text) const;

    std::vector<ChatRequest> requests() const;
    std::vector<std::string> request_tags() const;
    void clear_log();

private:
    std::uint64_t seed_;
    std::size_t dim_;
    std::map<std::string, std::vector<std::string>> canned_;
    std::map<std::string, Responder> responders_;
    Responder fallback_;
    mutable std::mutex mu_;
    std::vector<ChatRequest> log_;
};

}  // namespace jubensha::llm
