#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jubensha::script {

inline constexpr int kSchemaVersion = 1;

enum class Role { murderer, civilian };

std::string to_string(Role role);
Role role_from_string(std::string_view s);  // throws SchemaError("field-type")

struct CharacterScript {
    std::string name;
    unsigned age = 0;
    Role role = Role::civilian;
    std::string mission;
    std::string story;
    std::string timeline_text;
    // Optional line describing how this character relates to another participant, keyed by name.
    std::map<std::string, std::string> relationships;

    bool operator==(const CharacterScript&) const = default;
};

// Stage keys accepted in host_script.
inline constexpr std::string_view kHostStages[] = {
    "self_intro", "open_questions", "clue_reveal", "voting", "outcome"};

struct ScriptPack {
    int schema_version = kSchemaVersion;
    std::string title;
    std::string background_story;
    std::string game_rules_text;
    std::string victim_name;
    std::vector<CharacterScript> characters;
    std::map<std::string, std::vector<std::string>> clue_cards;
    std::map<std::string, std::vector<std::string>> host_script;
    // Case replay for humans; never shown to agents.
    std::optional<std::string> host_manual;

    bool operator==(const ScriptPack&) const = default;

    const CharacterScript* find(std::string_view name) const;
    const CharacterScript& character(std::string_view name) const;  // throws PreconditionError
    const CharacterScript& murderer() const;                          // throws PreconditionError
    std::vector<std::string> player_names() const;
};

enum class ViolationCode {
    player_count,
    murderer_count,
    empty_name,
    duplicate_name,
    empty_timeline,
    clue_orphan,
    unknown_host_stage,
    empty_victim,
};

std::string to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string message;
    std::string location;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_pack(const ScriptPack& pack);

// Structural parse only; invariants are left to validate_pack.
ScriptPack parse_script_pack(std::string_view document);
std::string serialize_script_pack(const ScriptPack& pack);

// Parse then validate; the first violation surfaces as SchemaError(code).
ScriptPack load_script_pack(const std::filesystem::path& path);

}  // namespace jubensha::script
