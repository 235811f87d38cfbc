#include "jubensha/eval/similarity.hpp"

#include <cmath>
#include <map>

#include "jubensha/errors.hpp"
#include "jubensha/memory/memory_store.hpp"
#include "jubensha/text.hpp"

namespace jubensha::eval {

std::set<std::u32string> char_trigrams(std::string_view s) {
    const std::u32string cps = text::decode_utf8(text::rtrim_copy(s));
    std::set<std::u32string> out;
    if (cps.empty()) return out;
    if (cps.size() < 3) {
        out.insert(cps);
        return out;
    }
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) out.insert(cps.substr(i, 3));
    return out;
}

double trigram_jaccard(std::string_view a, std::string_view b) {
    const auto ta = char_trigrams(a);
    const auto tb = char_trigrams(b);
    if (ta.empty() && tb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& g : ta) inter += tb.count(g);
    const std::size_t uni = ta.size() + tb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> tfidf_tokens(std::string_view s, TfidfTokens mode) {
    if (mode == TfidfTokens::whitespace) return text::split_whitespace(s);
    std::vector<std::string> out;
    std::u32string cps;
    for (char32_t c : text::decode_utf8(s)) {
        if (!text::is_space(c)) cps.push_back(c);
    }
    if (cps.size() < 3) {
        if (!cps.empty()) out.push_back(text::encode_utf8(cps));
        return out;
    }
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) out.push_back(text::encode_utf8(cps.substr(i, 3)));
    return out;
}

double tfidf_cosine(std::string_view a, std::string_view b, TfidfTokens mode) {
    if (mode == TfidfTokens::auto_detect) {
        mode = text::is_cjk_dominant(std::string(a) + std::string(b)) ? TfidfTokens::char_trigrams
                                                                       : TfidfTokens::whitespace;
    }
    std::map<std::string, std::pair<double, double>> tf;
    for (const auto& t : tfidf_tokens(a, mode)) tf[t].first += 1;
    for (const auto& t : tfidf_tokens(b, mode)) tf[t].second += 1;
    double dot = 0;
    double na = 0;
    double nb = 0;
    for (const auto& [term, counts] : tf) {
        const double df = (counts.first > 0 ? 1 : 0) + (counts.second > 0 ? 1 : 0);
        const double idf = std::log(3.0 / (1.0 + df)) + 1.0;
        const double wa = counts.first * idf;
        const double wb = counts.second * idf;
        dot += wa * wb;
        na += wa * wa;
        nb += wb * wb;
    }
    if (na == 0 && nb == 0) return 1.0;
    if (na == 0 || nb == 0) return 0.0;
    return std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb)));
}

std::vector<std::string> chunk_text(std::string_view s, std::size_t max_chars) {
    if (max_chars == 0) throw PreconditionError("chunk size must be positive");
    const std::u32string cps = text::decode_utf8(s);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < cps.size(); i += max_chars) out.push_back(text::encode_utf8(cps.substr(i, max_chars)));
    return out;
}

namespace {

llm::EmbeddingVector mean_embedding(std::string_view doc, llm::Gateway& gateway, std::size_t chunk_chars) {
    const auto vectors = gateway.embed(chunk_text(doc, chunk_chars), "similarity");
    std::vector<double> acc(vectors.front().dimension(), 0.0);
    for (const auto& v : vectors) {
        const auto vals = v.values();
        for (std::size_t i = 0; i < vals.size(); ++i) acc[i] += vals[i];
    }
    for (double& x : acc) x /= static_cast<double>(vectors.size());
    return llm::EmbeddingVector(std::move(acc));
}

}  // namespace

double embedding_cosine(std::string_view a, std::string_view b, llm::Gateway& gateway, std::size_t chunk_chars) {
    const std::string ta = text::rtrim_copy(a);
    const std::string tb = text::rtrim_copy(b);
    if (ta.empty() || tb.empty()) throw PreconditionError("embedding similarity needs non-empty documents");
    return memory::cosine(mean_embedding(ta, gateway, chunk_chars), mean_embedding(tb, gateway, chunk_chars));
}

SimilarityScores doc_similarity(std::string_view chat_history, std::string_view all_scripts, llm::Gateway& gateway,
                                const SimilarityOptions& options) {
    if (text::trim(chat_history).empty() || text::trim(all_scripts).empty()) {
        throw PreconditionError("doc_similarity needs two non-empty documents");
    }
    SimilarityScores s;
    s.embedding_cosine = embedding_cosine(chat_history, all_scripts, gateway, options.chunk_chars);
    s.tfidf_cosine = tfidf_cosine(text::rtrim_copy(chat_history), text::rtrim_copy(all_scripts), options.tokens);
    s.trigram_jaccard = trigram_jaccard(chat_history, all_scripts);
    return s;
}

}  // namespace jubensha::eval
