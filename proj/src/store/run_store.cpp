#include "jubensha/store/run_store.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "jubensha/errors.hpp"
#include "jubensha/fsutil.hpp"
#include "jubensha/store/serialize.hpp"
#include "jubensha/text.hpp"

namespace jubensha::store {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kConfigFile = "config.json";
constexpr const char* kTranscriptFile = "transcript.jsonl";
constexpr const char* kBallotsFile = "ballots.jsonl";
constexpr const char* kMemoriesFile = "memories.jsonl";
constexpr const char* kLedgerFile = "ledger.json";
constexpr const char* kQaFile = "qa.jsonl";
constexpr const char* kJudgedFile = "judged.jsonl";
constexpr const char* kManifestFile = "manifest.json";

constexpr const char* kRequiredFiles[] = {kConfigFile, kTranscriptFile, kBallotsFile, kMemoriesFile, kLedgerFile};

void check_version(const json& j, const std::string& where) {
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        throw SchemaError("missing-field", where + ": schema_version is required");
    }
    const int v = j["schema_version"].get<int>();
    if (v != kRunSchemaVersion) {
        throw SchemaError("schema-version", where + ": schema_version " + std::to_string(v) +
                                                " is not supported (this build reads version " +
                                                std::to_string(kRunSchemaVersion) + ")");
    }
}

json parse_doc(std::string_view text, const std::string& where) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw SchemaError("format", where + ": " + e.what());
    }
}

template <typename F>
void for_each_line(std::string_view text, const std::string& where, F&& f) {
    std::size_t lineno = 0;
    for (const auto& line : text::split_lines(text)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        f(parse_doc(line, where + ":" + std::to_string(lineno)));
    }
}

std::string manifest_text(const Manifest& m) {
    ordered_json j;
    j["schema_version"] = m.schema_version;
    j["run_id"] = m.run_id;
    ordered_json files = ordered_json::array();
    for (const auto& f : m.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["files"] = std::move(files);
    j["bundle_sha256"] = m.bundle_sha256;
    return j.dump(2) + "\n";
}

std::string bundle_digest(const std::vector<ManifestEntry>& files) {
    std::string lines;
    for (const auto& f : files) lines += f.name + " " + f.sha256 + "\n";
    return sha256_hex(lines);
}

std::string unique_suffix() {
    static std::atomic<unsigned> counter{0};
    return std::to_string(::getpid()) + "-" + std::to_string(counter++);
}

}  // namespace

llm::Money LedgerSnapshot::total_cost() const {
    llm::CostLedger l(prices);
    l.restore(calls);
    return l.total_cost();
}

LedgerSnapshot snapshot(const llm::CostLedger& ledger) { return {ledger.prices(), ledger.calls()}; }

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string default_run_id(const script::ScriptPack& pack, const game::GameConfig& config) {
    return "run-" + sha256_hex(script::serialize_script_pack(pack) + to_json(config).dump()).substr(0, 12);
}

RunBundle make_bundle(std::string run_id, std::string pack_ref, const script::ScriptPack& pack,
                      const game::GameConfig& config, game::GameResult result, const llm::Gateway& gateway) {
    RunBundle b;
    b.run_id = run_id.empty() ? default_run_id(pack, config) : std::move(run_id);
    b.pack_ref = std::move(pack_ref);
    b.pack = pack;
    b.config = config;
    b.models = {gateway.chat_model(), gateway.embedding_model(), ""};
    b.transcript = std::move(result.transcript);
    b.outcome = std::move(result.outcome);
    b.memories = std::move(result.memories);
    b.ledger = snapshot(gateway.ledger());
    return b;
}

std::vector<std::pair<std::string, std::string>> bundle_files(const RunBundle& bundle) {
    std::vector<std::pair<std::string, std::string>> files;

    ordered_json config;
    config["schema_version"] = kRunSchemaVersion;
    config["run_id"] = bundle.run_id;
    config["pack_ref"] = bundle.pack_ref;
    config["models"] = {{"chat", bundle.models.chat_model},
                        {"embedding", bundle.models.embedding_model},
                        {"judge", bundle.models.judge_model}};
    config["game"] = to_json(bundle.config);
    config["pack"] = ordered_json::parse(script::serialize_script_pack(bundle.pack));
    files.emplace_back(kConfigFile, config.dump(2) + "\n");

    std::string transcript;
    for (const auto& e : bundle.transcript) transcript += to_json(e).dump() + "\n";
    files.emplace_back(kTranscriptFile, std::move(transcript));

    std::string ballots;
    for (const auto& b : bundle.outcome.ballots) ballots += to_json(b).dump() + "\n";
    for (const auto& b : bundle.outcome.memoryless_ballots) ballots += to_json(b).dump() + "\n";
    files.emplace_back(kBallotsFile, std::move(ballots));

    std::string memories;
    for (const auto& store : bundle.memories) {
        for (const auto& r : store.records()) memories += to_json(store.agent_name(), r).dump() + "\n";
    }
    files.emplace_back(kMemoriesFile, std::move(memories));

    ordered_json ledger;
    ledger["schema_version"] = kRunSchemaVersion;
    ledger["prices"] = ordered_json::parse(bundle.ledger.prices.to_json_text());
    ordered_json calls = ordered_json::array();
    for (const auto& c : bundle.ledger.calls) calls.push_back(to_json(c));
    ledger["calls"] = std::move(calls);
    const llm::Money total = bundle.ledger.total_cost();
    ledger["total_cost"] = {{"currency", bundle.ledger.prices.currency},
                            {"pico", total.pico},
                            {"display", total.format(bundle.ledger.prices.minor_unit_digits)}};
    files.emplace_back(kLedgerFile, ledger.dump(2) + "\n");

    if (!bundle.qa_items.empty()) files.emplace_back(kQaFile, eval::write_jsonl(bundle.qa_items));
    if (!bundle.judged.empty()) files.emplace_back(kJudgedFile, eval::write_jsonl(bundle.judged));
    return files;
}

Manifest build_manifest(const std::string& run_id, const std::vector<std::pair<std::string, std::string>>& files) {
    Manifest m;
    m.run_id = run_id;
    for (const auto& [name, content] : files) m.files.push_back({name, sha256_hex(content), content.size()});
    m.bundle_sha256 = bundle_digest(m.files);
    return m;
}

fs::path persist_run(const RunBundle& bundle, const fs::path& root) {
    if (bundle.run_id.empty() || bundle.run_id.find_first_of("/\\") != std::string::npos || bundle.run_id[0] == '.') {
        throw PreconditionError("run_id must be a plain directory name");
    }
    const auto files = bundle_files(bundle);
    const std::string manifest = manifest_text(build_manifest(bundle.run_id, files));
    const fs::path target = root / bundle.run_id;
    fs::path tmp;
    try {
        fs::create_directories(root);
        if (fs::exists(target / kManifestFile)) {
            bool same = read_text_file(target / kManifestFile) == manifest;
            for (const auto& [name, content] : files) {
                if (!same) break;
                std::error_code ec;
                same = fs::exists(target / name, ec) && read_text_file(target / name) == content;
            }
            if (same) return target;
        }
        tmp = root / ("." + bundle.run_id + ".tmp-" + unique_suffix());
        fs::create_directory(tmp);
        for (const auto& [name, content] : files) write_text_file(tmp / name, content);
        write_text_file(tmp / kManifestFile, manifest);
        if (fs::exists(target)) {
            const fs::path old = root / ("." + bundle.run_id + ".old-" + unique_suffix());
            fs::rename(target, old);
            fs::rename(tmp, target);
            fs::remove_all(old);
        } else {
            fs::rename(tmp, target);
        }
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        if (!tmp.empty()) fs::remove_all(tmp, ec);
        throw IoError(std::string("cannot persist run: ") + e.what());
    } catch (const IoError&) {
        std::error_code ec;
        if (!tmp.empty()) fs::remove_all(tmp, ec);
        throw;
    }
    return target;
}

Manifest read_manifest(const fs::path& dir) {
    const fs::path path = dir / kManifestFile;
    std::error_code ec;
    if (!fs::exists(path, ec)) throw IoError("no manifest in " + dir.string());
    const json j = parse_doc(read_text_file(path), kManifestFile);
    check_version(j, kManifestFile);
    Manifest m;
    m.schema_version = j["schema_version"].get<int>();
    try {
        m.run_id = j.at("run_id").get<std::string>();
        for (const auto& f : j.at("files")) {
            m.files.push_back({f.at("name").get<std::string>(), f.at("sha256").get<std::string>(),
                               f.at("bytes").get<std::uint64_t>()});
        }
        m.bundle_sha256 = j.at("bundle_sha256").get<std::string>();
    } catch (const json::exception& e) {
        throw SchemaError("field-type", std::string("manifest: ") + e.what());
    }
    return m;
}

RunBundle load_run(const fs::path& dir) {
    const Manifest m = read_manifest(dir);
    if (bundle_digest(m.files) != m.bundle_sha256) throw SchemaError("checksum", "manifest bundle hash mismatch");
    std::map<std::string, std::string> contents;
    for (const auto& f : m.files) {
        std::error_code ec;
        if (!fs::exists(dir / f.name, ec)) throw SchemaError("missing-file", f.name + " listed in the manifest is missing");
        std::string content = read_text_file(dir / f.name);
        if (sha256_hex(content) != f.sha256) throw SchemaError("checksum", f.name + " does not match its manifest hash");
        contents[f.name] = std::move(content);
    }
    for (const char* name : kRequiredFiles) {
        if (!contents.count(name)) throw SchemaError("missing-file", std::string(name) + " is not part of the run");
    }

    RunBundle b;
    try {
        const json config = parse_doc(contents[kConfigFile], kConfigFile);
        check_version(config, kConfigFile);
        b.run_id = config.at("run_id").get<std::string>();
        if (b.run_id != m.run_id) throw SchemaError("field-value", "config run_id differs from the manifest");
        b.pack_ref = config.at("pack_ref").get<std::string>();
        const auto& models = config.at("models");
        b.models = {models.at("chat").get<std::string>(), models.at("embedding").get<std::string>(),
                    models.at("judge").get<std::string>()};
        b.config = game_config_from_json(config.at("game"));
        b.pack = script::parse_script_pack(config.at("pack").dump());

        for_each_line(contents[kTranscriptFile], kTranscriptFile,
                      [&](const json& j) { b.transcript.push_back(transcript_event_from_json(j)); });

        std::vector<game::Ballot> ballots;
        for_each_line(contents[kBallotsFile], kBallotsFile, [&](const json& j) { ballots.push_back(ballot_from_json(j)); });
        b.outcome = outcome_from_ballots(b.pack, std::move(ballots));

        for (const auto& c : b.pack.characters) b.memories.emplace_back(c.name);
        for_each_line(contents[kMemoriesFile], kMemoriesFile, [&](const json& j) {
            const auto agent = j.at("agent").get<std::string>();
            auto it = std::find_if(b.memories.begin(), b.memories.end(),
                                   [&](const memory::MemoryStore& s) { return s.agent_name() == agent; });
            if (it == b.memories.end()) throw SchemaError("field-value", "memory for unknown agent '" + agent + "'");
            const auto& r = it->append(j.at("text").get<std::string>(),
                                       llm::EmbeddingVector(j.at("embedding").get<std::vector<double>>()),
                                       j.at("turn").get<std::int64_t>(),
                                       memory::record_kind_from_string(j.at("kind").get<std::string>()));
            if (r.seq != j.at("seq").get<std::int64_t>()) throw SchemaError("field-value", "memory seq out of order");
        });

        const json ledger = parse_doc(contents[kLedgerFile], kLedgerFile);
        check_version(ledger, kLedgerFile);
        b.ledger.prices = llm::PriceTable::from_json_text(ledger.at("prices").dump());
        for (const auto& c : ledger.at("calls")) b.ledger.calls.push_back(call_record_from_json(c));

        if (contents.count(kQaFile)) b.qa_items = eval::read_qa_items(contents[kQaFile]);
        if (contents.count(kJudgedFile)) b.judged = eval::read_judged_answers(contents[kJudgedFile]);
    } catch (const json::exception& e) {
        throw SchemaError("field-type", e.what());
    } catch (const SchemaError&) {
        throw;
    } catch (const PreconditionError& e) {
        throw SchemaError("field-value", e.what());
    } catch (const FormatError& e) {
        throw SchemaError("format", e.what());
    }
    return b;
}

}  // namespace jubensha::store
