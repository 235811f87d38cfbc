#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jubensha/eval/qa.hpp"
#include "jubensha/game/game.hpp"
#include "jubensha/llm/ledger.hpp"
#include "jubensha/memory/memory_store.hpp"
#include "jubensha/script/script_pack.hpp"

namespace jubensha::store {

inline constexpr int kRunSchemaVersion = 1;

struct ModelIds {
    std::string chat_model;
    std::string embedding_model;
    std::string judge_model;

    bool operator==(const ModelIds&) const = default;
};

struct LedgerSnapshot {
    llm::PriceTable prices;
    std::vector<llm::CallRecord> calls;

    llm::Money total_cost() const;
    bool operator==(const LedgerSnapshot&) const = default;
};

LedgerSnapshot snapshot(const llm::CostLedger& ledger);

struct RunBundle {
    std::string run_id;
    std::string pack_ref;
    script::ScriptPack pack;
    game::GameConfig config;
    ModelIds models;
    std::vector<game::TranscriptEvent> transcript;
    game::GameOutcome outcome;
    std::vector<memory::MemoryStore> memories;
    LedgerSnapshot ledger;
    // Written only when non-empty.
    std::vector<eval::QAItem> qa_items;
    std::vector<eval::JudgedAnswer> judged;
};

// Deterministic id from the pack, config and seed.
std::string default_run_id(const script::ScriptPack& pack, const game::GameConfig& config);

RunBundle make_bundle(std::string run_id, std::string pack_ref, const script::ScriptPack& pack,
                      const game::GameConfig& config, game::GameResult result, const llm::Gateway& gateway);

struct ManifestEntry {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct Manifest {
    int schema_version = kRunSchemaVersion;
    std::string run_id;
    std::vector<ManifestEntry> files;
    // SHA-256 over "name sha256\n" lines in file order.
    std::string bundle_sha256;
};

std::string sha256_hex(std::string_view data);

// Serialized file contents keyed by file name, manifest excluded.
std::vector<std::pair<std::string, std::string>> bundle_files(const RunBundle& bundle);
Manifest build_manifest(const std::string& run_id, const std::vector<std::pair<std::string, std::string>>& files);

// Writes root/<run_id> atomically and returns that path. Throws IoError.
std::filesystem::path persist_run(const RunBundle& bundle, const std::filesystem::path& root);

// Throws IoError when the manifest is unreadable and SchemaError on a missing, tampered or
// unsupported artifact.
RunBundle load_run(const std::filesystem::path& dir);
Manifest read_manifest(const std::filesystem::path& dir);

}  // namespace jubensha::store
