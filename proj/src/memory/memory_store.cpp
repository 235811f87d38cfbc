#include "jubensha/memory/memory_store.hpp"

#include <algorithm>
#include <cmath>

#include "jubensha/text.hpp"

namespace jubensha::memory {

std::string to_string(RecordKind kind) {
    switch (kind) {
        case RecordKind::utterance: return "utterance";
        case RecordKind::clue: return "clue";
        case RecordKind::host: return "host";
    }
    return "utterance";
}

RecordKind record_kind_from_string(std::string_view s) {
    if (s == "utterance") return RecordKind::utterance;
    if (s == "clue") return RecordKind::clue;
    if (s == "host") return RecordKind::host;
    throw SchemaError("field-type", "unknown memory record kind '" + std::string(s) + "'");
}

double cosine(const llm::EmbeddingVector& a, const llm::EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw llm::DimensionMismatch("cosine of vectors with dimensions " + std::to_string(a.dimension()) +
                                     " and " + std::to_string(b.dimension()));
    }
    const auto x = a.values();
    const auto y = b.values();
    double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0 || ny == 0) throw ZeroVector("cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

MemoryStore::MemoryStore(std::string agent_name) : agent_name_(std::move(agent_name)) {}

const MemoryRecord& MemoryStore::record(llm::Gateway& gateway, std::string text, std::int64_t turn,
                                        RecordKind kind) {
    if (text::trim(text).empty()) throw PreconditionError("memory text must be non-empty");
    llm::EmbeddingVector e = gateway.embed_one(text, "memory");
    return append(std::move(text), std::move(e), turn, kind);
}

const MemoryRecord& MemoryStore::append(std::string text, llm::EmbeddingVector embedding, std::int64_t turn,
                                        RecordKind kind) {
    if (text::trim(text).empty()) throw PreconditionError("memory text must be non-empty");
    if (!records_.empty() && records_.front().embedding.dimension() != embedding.dimension()) {
        throw llm::DimensionMismatch("memory store dimension is " +
                                     std::to_string(records_.front().embedding.dimension()));
    }
    MemoryRecord r;
    r.seq = static_cast<std::int64_t>(records_.size());
    r.text = std::move(text);
    r.embedding = std::move(embedding);
    r.turn = turn;
    r.kind = kind;
    records_.push_back(std::move(r));
    return records_.back();
}

std::vector<ScoredRecord> MemoryStore::retrieve_scored(const llm::EmbeddingVector& query, std::size_t k) const {
    if (k == 0) throw PreconditionError("k must be >= 1");
    std::vector<ScoredRecord> scored;
    scored.reserve(records_.size());
    for (const auto& r : records_) scored.push_back({&r, cosine(query, r.embedding)});
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const ScoredRecord& a, const ScoredRecord& b) {
                          if (a.similarity != b.similarity) return a.similarity > b.similarity;
                          return a.record->seq < b.record->seq;
                      });
    scored.resize(n);
    return scored;
}

std::vector<MemoryRecord> MemoryStore::retrieve(llm::Gateway& gateway, std::string_view query,
                                                std::size_t k) const {
    if (k == 0) throw PreconditionError("k must be >= 1");
    if (records_.empty()) return {};
    if (text::trim(query).empty()) throw PreconditionError("retrieval query must be non-empty");
    const llm::EmbeddingVector q = gateway.embed_one(std::string(query), "memory_query");
    std::vector<MemoryRecord> out;
    for (const auto& s : retrieve_scored(q, k)) out.push_back(*s.record);
    return out;
}

}  // namespace jubensha::memory
