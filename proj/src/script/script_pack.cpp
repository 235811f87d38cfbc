#include "jubensha/script/script_pack.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "jubensha/errors.hpp"
#include "jubensha/fsutil.hpp"
#include "jubensha/text.hpp"

namespace jubensha::script {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Role role) { return role == Role::murderer ? "murderer" : "civilian"; }

Role role_from_string(std::string_view s) {
    if (s == "murderer") return Role::murderer;
    if (s == "civilian") return Role::civilian;
    throw SchemaError("field-type", "role must be murderer or civilian, got '" + std::string(s) + "'");
}

std::string to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::player_count: return "player-count";
        case ViolationCode::murderer_count: return "murderer-count";
        case ViolationCode::empty_name: return "empty-name";
        case ViolationCode::duplicate_name: return "duplicate-name";
        case ViolationCode::empty_timeline: return "empty-timeline";
        case ViolationCode::clue_orphan: return "clue-orphan";
        case ViolationCode::unknown_host_stage: return "unknown-host-stage";
        case ViolationCode::empty_victim: return "empty-victim";
    }
    return "unknown";
}

const CharacterScript* ScriptPack::find(std::string_view name) const {
    for (const auto& c : characters) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

const CharacterScript& ScriptPack::character(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw PreconditionError("no character named '" + std::string(name) + "'");
}

const CharacterScript& ScriptPack::murderer() const {
    const CharacterScript* found = nullptr;
    for (const auto& c : characters) {
        if (c.role == Role::murderer) {
            if (found) throw PreconditionError("pack has more than one murderer");
            found = &c;
        }
    }
    if (!found) throw PreconditionError("pack has no murderer");
    return *found;
}

std::vector<std::string> ScriptPack::player_names() const {
    std::vector<std::string> names;
    names.reserve(characters.size());
    for (const auto& c : characters) names.push_back(c.name);
    return names;
}

ValidationReport validate_pack(const ScriptPack& pack) {
    ValidationReport report;
    auto add = [&](ViolationCode code, std::string message, std::string location) {
        report.violations.push_back({code, std::move(message), std::move(location)});
    };

    const auto n = pack.characters.size();
    if (n != 4 && n != 5) {
        add(ViolationCode::player_count, "pack has " + std::to_string(n) + " characters, expected 4 or 5",
            "characters");
    }
    const auto murderers = std::count_if(pack.characters.begin(), pack.characters.end(),
                                         [](const CharacterScript& c) { return c.role == Role::murderer; });
    if (murderers != 1) {
        add(ViolationCode::murderer_count,
            "pack has " + std::to_string(murderers) + " murderers, expected exactly 1", "characters");
    }
    if (text::trim(pack.victim_name).empty()) {
        add(ViolationCode::empty_victim, "victim_name is empty", "victim_name");
    }

    std::set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = pack.characters[i];
        const std::string loc = "characters[" + std::to_string(i) + "]";
        if (text::trim(c.name).empty()) {
            add(ViolationCode::empty_name, "character name is empty", loc + ".name");
        } else if (!seen.insert(c.name).second) {
            add(ViolationCode::duplicate_name, "duplicate character name '" + c.name + "'", loc + ".name");
        }
        if (text::trim(c.timeline_text).empty()) {
            add(ViolationCode::empty_timeline, "timeline_text is empty for '" + c.name + "'",
                loc + ".timeline_text");
        }
    }

    for (const auto& [owner, cards] : pack.clue_cards) {
        if (!pack.find(owner)) {
            add(ViolationCode::clue_orphan, "clue cards keyed to unknown character '" + owner + "'",
                "clue_cards." + owner);
        }
    }
    for (const auto& [stage, lines] : pack.host_script) {
        const bool known = std::find(std::begin(kHostStages), std::end(kHostStages), stage) !=
                           std::end(kHostStages);
        if (!known) {
            add(ViolationCode::unknown_host_stage, "unknown host stage '" + stage + "'",
                "host_script." + stage);
        }
    }

    std::stable_sort(report.violations.begin(), report.violations.end(),
                     [](const Violation& a, const Violation& b) {
                         if (a.location != b.location) return a.location < b.location;
                         return static_cast<int>(a.code) < static_cast<int>(b.code);
                     });
    return report;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError("missing-field", where + key + " is required");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw SchemaError("field-type", where + key + " must be a string");
    return v.get<std::string>();
}

std::map<std::string, std::vector<std::string>> string_list_map(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw SchemaError("field-type", where + " must be an object");
    std::map<std::string, std::vector<std::string>> out;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!it.value().is_array()) {
            throw SchemaError("field-type", where + "." + it.key() + " must be a list of strings");
        }
        auto& list = out[it.key()];
        for (const auto& item : it.value()) {
            if (!item.is_string()) {
                throw SchemaError("field-type", where + "." + it.key() + " must be a list of strings");
            }
            list.push_back(item.get<std::string>());
        }
    }
    return out;
}

CharacterScript parse_character(const json& j, std::size_t index) {
    const std::string where = "characters[" + std::to_string(index) + "].";
    if (!j.is_object()) throw SchemaError("field-type", where + " must be an object");
    CharacterScript c;
    c.name = require_string(j, "name", where);
    const json& age = require(j, "age", where);
    if (!age.is_number_integer() || age.get<long long>() < 0) {
        throw SchemaError("field-type", where + "age must be a non-negative integer");
    }
    c.age = age.get<unsigned>();
    c.role = role_from_string(require_string(j, "role", where));
    c.mission = require_string(j, "mission", where);
    c.story = require_string(j, "story", where);
    c.timeline_text = require_string(j, "timeline_text", where);
    if (auto it = j.find("relationships"); it != j.end()) {
        if (!it->is_object()) throw SchemaError("field-type", where + "relationships must be an object");
        for (auto r = it->begin(); r != it->end(); ++r) {
            if (!r.value().is_string()) {
                throw SchemaError("field-type", where + "relationships." + r.key() + " must be a string");
            }
            c.relationships[r.key()] = r.value().get<std::string>();
        }
    }
    return c;
}

}  // namespace

ScriptPack parse_script_pack(std::string_view document) {
    json root;
    try {
        root = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed pack document: ") + e.what());
    }
    if (!root.is_object()) throw FormatError("pack document must be an object");

    ScriptPack pack;
    const json& version = require(root, "schema_version", "");
    if (!version.is_number_integer()) throw SchemaError("field-type", "schema_version must be an integer");
    pack.schema_version = version.get<int>();
    if (pack.schema_version != kSchemaVersion) {
        throw SchemaError("schema-version", "unsupported schema_version " +
                                                std::to_string(pack.schema_version) + ", expected " +
                                                std::to_string(kSchemaVersion));
    }
    pack.title = require_string(root, "title", "");
    pack.background_story = require_string(root, "background_story", "");
    pack.game_rules_text = require_string(root, "game_rules_text", "");
    pack.victim_name = require_string(root, "victim_name", "");
    const json& chars = require(root, "characters", "");
    if (!chars.is_array()) throw SchemaError("field-type", "characters must be a list");
    for (std::size_t i = 0; i < chars.size(); ++i) pack.characters.push_back(parse_character(chars[i], i));
    if (auto it = root.find("clue_cards"); it != root.end()) pack.clue_cards = string_list_map(*it, "clue_cards");
    if (auto it = root.find("host_script"); it != root.end()) {
        pack.host_script = string_list_map(*it, "host_script");
    }
    if (auto it = root.find("host_manual"); it != root.end() && !it->is_null()) {
        if (!it->is_string()) throw SchemaError("field-type", "host_manual must be a string");
        pack.host_manual = it->get<std::string>();
    }
    return pack;
}

std::string serialize_script_pack(const ScriptPack& pack) {
    ordered_json root;
    root["schema_version"] = pack.schema_version;
    root["title"] = pack.title;
    root["background_story"] = pack.background_story;
    root["game_rules_text"] = pack.game_rules_text;
    root["victim_name"] = pack.victim_name;
    ordered_json chars = ordered_json::array();
    for (const auto& c : pack.characters) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["age"] = c.age;
        jc["role"] = to_string(c.role);
        jc["mission"] = c.mission;
        jc["story"] = c.story;
        jc["timeline_text"] = c.timeline_text;
        if (!c.relationships.empty()) {
            ordered_json rel = ordered_json::object();
            for (const auto& [k, v] : c.relationships) rel[k] = v;
            jc["relationships"] = rel;
        }
        chars.push_back(std::move(jc));
    }
    root["characters"] = std::move(chars);
    ordered_json clues = ordered_json::object();
    for (const auto& [k, v] : pack.clue_cards) clues[k] = v;
    root["clue_cards"] = std::move(clues);
    if (!pack.host_script.empty()) {
        ordered_json host = ordered_json::object();
        for (const auto& [k, v] : pack.host_script) host[k] = v;
        root["host_script"] = std::move(host);
    }
    if (pack.host_manual) root["host_manual"] = *pack.host_manual;
    return root.dump(2) + "\n";
}

ScriptPack load_script_pack(const std::filesystem::path& path) {
    ScriptPack pack = parse_script_pack(read_text_file(path));
    const ValidationReport report = validate_pack(pack);
    if (!report.ok()) {
        const Violation& first = report.violations.front();
        throw SchemaError(to_string(first.code), first.message + " (" + first.location + ")");
    }
    return pack;
}

}  // namespace jubensha::script
