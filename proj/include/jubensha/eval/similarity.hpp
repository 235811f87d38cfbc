#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jubensha/llm/gateway.hpp"

namespace jubensha::eval {

struct SimilarityScores {
    double embedding_cosine = 0;
    double tfidf_cosine = 0;
    double trigram_jaccard = 0;

    bool operator==(const SimilarityScores&) const = default;
};

enum class TfidfTokens { auto_detect, char_trigrams, whitespace };

// Code-point trigrams after trailing whitespace is removed. A non-empty text shorter than
// three code points contributes itself as its only gram.
std::set<std::u32string> char_trigrams(std::string_view s);

// |A ∩ B| / |A ∪ B|; two empty sets count as identical.
double trigram_jaccard(std::string_view a, std::string_view b);

std::vector<std::string> tfidf_tokens(std::string_view s, TfidfTokens mode);

// Two-document corpus, raw term counts, idf = ln((1 + 2) / (1 + df)) + 1.
double tfidf_cosine(std::string_view a, std::string_view b, TfidfTokens mode = TfidfTokens::auto_detect);

// Non-overlapping code-point chunks of at most max_chars.
std::vector<std::string> chunk_text(std::string_view s, std::size_t max_chars);

double embedding_cosine(std::string_view a, std::string_view b, llm::Gateway& gateway, std::size_t chunk_chars);

struct SimilarityOptions {
    std::size_t chunk_chars = 2000;
    TfidfTokens tokens = TfidfTokens::auto_detect;
};

SimilarityScores doc_similarity(std::string_view chat_history, std::string_view all_scripts, llm::Gateway& gateway,
                                const SimilarityOptions& options = {});

}  // namespace jubensha::eval
