#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jubensha/llm/gateway.hpp"

namespace jubensha::memory {

class ZeroVector : public Error {
public:
    using Error::Error;
};

enum class RecordKind { utterance, clue, host };

std::string to_string(RecordKind kind);
RecordKind record_kind_from_string(std::string_view s);

struct MemoryRecord {
    std::int64_t seq = 0;
    std::string text;
    llm::EmbeddingVector embedding;
    std::int64_t turn = 0;
    RecordKind kind = RecordKind::utterance;
};

struct ScoredRecord {
    const MemoryRecord* record = nullptr;
    double similarity = 0;
};

// Throws ZeroVector or llm::DimensionMismatch.
double cosine(const llm::EmbeddingVector& a, const llm::EmbeddingVector& b);

inline constexpr std::size_t kDefaultRetrievalK = 5;

class MemoryStore {
public:
    explicit MemoryStore(std::string agent_name);

    const std::string& agent_name() const noexcept { return agent_name_; }
    std::span<const MemoryRecord> records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const MemoryRecord& record(llm::Gateway& gateway, std::string text, std::int64_t turn, RecordKind kind);
    // Appends a record whose embedding is already known.
    const MemoryRecord& append(std::string text, llm::EmbeddingVector embedding, std::int64_t turn,
                               RecordKind kind);

    std::vector<MemoryRecord> retrieve(llm::Gateway& gateway, std::string_view query,
                                       std::size_t k = kDefaultRetrievalK) const;
    std::vector<ScoredRecord> retrieve_scored(const llm::EmbeddingVector& query, std::size_t k) const;

private:
    std::string agent_name_;
    std::vector<MemoryRecord> records_;
};

}  // namespace jubensha::memory
