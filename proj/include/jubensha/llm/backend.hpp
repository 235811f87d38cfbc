#pragma once

#include <string>
#include <vector>

#include "jubensha/llm/types.hpp"

namespace jubensha::llm {

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual EmbeddingBatch embed(const std::vector<std::string>& texts) = 0;
    virtual std::string chat_model() const = 0;
    virtual std::string embedding_model() const = 0;
};

}  // namespace jubensha::llm
