#include "jubensha/llm/mock_backend.hpp"

#include <cmath>

#include "jubensha/fsutil.hpp"
#include "jubensha/text.hpp"

namespace jubensha::llm {

MockBackend::MockBackend(std::uint64_t seed, std::size_t embedding_dimension)
    : seed_(seed), dim_(embedding_dimension) {
    if (dim_ == 0) throw PreconditionError("embedding dimension must be positive");
}

void MockBackend::load_fixture_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError("fixture directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::vector<std::string> responses;
        std::string cur;
        for (const auto& line : text::split_lines(read_text_file(entry.path()))) {
            if (text::trim(line) == "---") {
                responses.push_back(text::trim_copy(cur));
                cur.clear();
            } else {
                if (!cur.empty()) cur.push_back('\n');
                cur += line;
            }
        }
        if (!text::trim(cur).empty() || responses.empty()) responses.push_back(text::trim_copy(cur));
        set_canned(entry.path().stem().string(), std::move(responses));
    }
}

void MockBackend::set_canned(const std::string& tag, std::vector<std::string> responses) {
    if (responses.empty()) throw PreconditionError("canned response list for '" + tag + "' is empty");
    std::lock_guard lock(mu_);
    canned_[tag] = std::move(responses);
}

void MockBackend::set_responder(const std::string& tag, Responder responder) {
    std::lock_guard lock(mu_);
    responders_[tag] = std::move(responder);
}

void MockBackend::set_fallback(Responder responder) {
    std::lock_guard lock(mu_);
    fallback_ = std::move(responder);
}

std::uint64_t MockBackend::request_seed(const ChatRequest& request) const {
    std::uint64_t h = text::mix64(seed_);
    h = text::hash_combine(h, text::fnv1a64(request.tag));
    h = text::hash_combine(h, text::fnv1a64(request.system_text));
    h = text::hash_combine(h, text::fnv1a64(request.user_text));
    h = text::hash_combine(h, request.variant);
    return h;
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
    const std::uint64_t seed = request_seed(request);
    std::string out;
    Responder responder;
    {
        std::lock_guard lock(mu_);
        log_.push_back(request);
        if (auto it = canned_.find(request.tag); it != canned_.end()) {
            out = it->second[seed % it->second.size()];
        } else if (auto r = responders_.find(request.tag); r != responders_.end()) {
            responder = r->second;
        } else {
            responder = fallback_;
        }
    }
    if (responder) out = responder(request, seed);
    ChatResponse resp;
    resp.text = std::move(out);
    resp.prompt_tokens = approximate_tokens(request.system_text) + approximate_tokens(request.user_text);
    resp.completion_tokens = approximate_tokens(resp.text);
    resp.model = chat_model();
    return resp;
}

EmbeddingVector MockBackend::embed_text(const std::string& input) const {
    std::vector<double> v(dim_, 0.0);
    std::u32string cps = text::decode_utf8(input);
    for (char32_t& c : cps) {
        if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
    }
    const std::uint64_t basis = text::mix64(seed_ ^ 0x5eedULL);
    auto feature = [&](std::u32string_view gram) {
        const std::uint64_t h = text::hash_combine(basis, text::fnv1a64(text::encode_utf8(gram)));
        const double sign = (h >> 63) ? 1.0 : -1.0;
        v[(h >> 1) % dim_] += sign;
    };
    if (cps.size() < 3) {
        feature(cps);
    } else {
        for (std::size_t i = 0; i + 3 <= cps.size(); ++i) feature(std::u32string_view(cps).substr(i, 3));
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    if (norm == 0) {
        std::uint64_t state = text::hash_combine(basis, text::fnv1a64(input));
        for (auto& x : v) {
            state = text::mix64(state);
            x = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
            norm += x * x;
        }
        if (norm == 0) {
            v[0] = 1.0;
            norm = 1.0;
        }
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return EmbeddingVector(std::move(v));
}

EmbeddingBatch MockBackend::embed(const std::vector<std::string>& texts) {
    EmbeddingBatch batch;
    for (const auto& t : texts) {
        batch.vectors.push_back(embed_text(t));
        batch.tokens += approximate_tokens(t);
    }
    return batch;
}

std::vector<ChatRequest> MockBackend::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::vector<std::string> MockBackend::request_tags() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> tags;
    tags.reserve(log_.size());
    for (const auto& r : log_) tags.push_back(r.tag);
    return tags;
}

void MockBackend::clear_log() {
    std::lock_guard lock(mu_);
    log_.clear();
}

}  // namespace jubensha::llm
