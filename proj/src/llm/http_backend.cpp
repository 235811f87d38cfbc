#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "jubensha/llm/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "jubensha/fsutil.hpp"

namespace jubensha::llm {

using nlohmann::json;

void HttpConfig::apply_environment() {
    auto env = [](const char* name) -> const char* {
        const char* v = std::getenv(name);
        return (v && *v) ? v : nullptr;
    };
    if (const char* v = env("JUBENSHA_API_BASE")) base_url = v;
    if (const char* v = env("JUBENSHA_API_KEY")) api_key = v;
    if (const char* v = env("JUBENSHA_CHAT_MODEL")) chat_model = v;
    if (const char* v = env("JUBENSHA_EMBED_MODEL")) embedding_model = v;
}

void HttpConfig::apply_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError("malformed gateway config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError("gateway config must be an object");
    base_url = j.value("base_url", base_url);
    api_key = j.value("api_key", api_key);
    chat_model = j.value("chat_model", chat_model);
    embedding_model = j.value("embedding_model", embedding_model);
    if (j.contains("timeout_seconds")) timeout = std::chrono::seconds(j.at("timeout_seconds").get<int>());
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
    const std::string& url = config_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw PreconditionError("base_url needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpBackend::post(const std::string& path, const std::string& body) {
    httplib::Client client(origin_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = client.Post(path_prefix_ + path, headers, body, "application/json");
    if (!res) {
        throw TransientError("request to " + origin_ + path_prefix_ + path +
                             " failed: " + httplib::to_string(res.error()));
    }
    const int status = res->status;
    if (status == 401 || status == 403) throw AuthError("provider rejected credentials (HTTP " + std::to_string(status) + ")");
    if (status == 408 || status == 409 || status == 429 || status >= 500) {
        throw TransientError("provider returned HTTP " + std::to_string(status));
    }
    if (status < 200 || status >= 300) {
        throw TransportError("provider returned HTTP " + std::to_string(status) + ": " + res->body.substr(0, 300));
    }
    return res->body;
}

namespace {

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("provider returned malformed JSON: ") + e.what());
    }
}

}  // namespace

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    json payload;
    payload["model"] = config_.chat_model;
    json messages = json::array();
    if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    payload["messages"] = std::move(messages);
    payload["temperature"] = request.temperature;
    payload["max_tokens"] = request.max_output_tokens;

    const json body = parse_body(post("/chat/completions", payload.dump()));
    ChatResponse resp;
    try {
        resp.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected chat response shape: ") + e.what());
    }
    resp.model = body.value("model", config_.chat_model);
    const auto usage = body.find("usage");
    if (usage != body.end() && usage->is_object() && usage->contains("prompt_tokens") &&
        usage->contains("completion_tokens")) {
        resp.prompt_tokens = usage->at("prompt_tokens").get<std::int64_t>();
        resp.completion_tokens = usage->at("completion_tokens").get<std::int64_t>();
    } else {
        resp.prompt_tokens = approximate_tokens(request.system_text) + approximate_tokens(request.user_text);
        resp.completion_tokens = approximate_tokens(resp.text);
        resp.approximate_usage = true;
        spdlog::debug("provider omitted usage for '{}', approximating", request.tag);
    }
    return resp;
}

EmbeddingBatch HttpBackend::embed(const std::vector<std::string>& texts) {
    json payload;
    payload["model"] = config_.embedding_model;
    payload["input"] = texts;
    const json body = parse_body(post("/embeddings", payload.dump()));
    EmbeddingBatch batch;
    try {
        const json& data = body.at("data");
        batch.vectors.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::size_t idx = data[i].value("index", i);
            if (idx >= data.size()) throw TransportError("embedding index out of range");
            batch.vectors[idx] = EmbeddingVector(data[i].at("embedding").get<std::vector<double>>());
        }
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected embedding response shape: ") + e.what());
    } catch (const PreconditionError& e) {
        throw TransportError(std::string("provider returned an invalid embedding: ") + e.what());
    }
    const auto usage = body.find("usage");
    if (usage != body.end() && usage->is_object() && usage->contains("prompt_tokens")) {
        batch.tokens = usage->at("prompt_tokens").get<std::int64_t>();
    } else {
        for (const auto& t : texts) batch.tokens += approximate_tokens(t);
        batch.approximate_usage = true;
    }
    return batch;
}

}  // namespace jubensha::llm
