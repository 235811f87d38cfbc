#include <doctest.h>

#include "jubensha/errors.hpp"
#include "jubensha/fsutil.hpp"
#include "jubensha/script/script_pack.hpp"
#include "support.hpp"

using namespace jubensha;
using namespace jubensha::script;

namespace {

std::string schema_code_of(const std::filesystem::path& path) {
    try {
        load_script_pack(path);
    } catch (const SchemaError& e) {
        return e.code();
    }
    return "";
}

bool has_code(const ValidationReport& r, ViolationCode code) {
    for (const auto& v : r.violations) {
        if (v.code == code) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("fixture pack loads") {
    const auto& p = testing::greywater();
    CHECK(p.characters.size() == 4);
    CHECK(p.murderer().name == "Engineer Pike");
    CHECK(validate_pack(p).ok());
    CHECK(p.player_names().size() == 4);
    CHECK_THROWS_AS(p.character("Ghost"), PreconditionError);
}

TEST_CASE("load surfaces the first violation code") {
    const auto dir = testing::scratch_dir("packs");
    auto pack = testing::greywater();

    auto none = pack;
    for (auto& c : none.characters) c.role = Role::civilian;
    write_text_file(dir / "none.json", serialize_script_pack(none));
    CHECK(schema_code_of(dir / "none.json") == "murderer-count");

    auto six = pack;
    for (int i = 0; i < 2; ++i) {
        auto extra = pack.characters.front();
        extra.name = "Extra " + std::to_string(i);
        six.characters.push_back(extra);
    }
    write_text_file(dir / "six.json", serialize_script_pack(six));
    CHECK(schema_code_of(dir / "six.json") == "player-count");

    CHECK_THROWS_AS(load_script_pack(dir / "missing.json"), IoError);
    write_text_file(dir / "broken.json", "{ not json");
    CHECK_THROWS_AS(load_script_pack(dir / "broken.json"), FormatError);
}

TEST_CASE("validate_pack reports each violation") {
    auto pack = testing::greywater();
    SUBCASE("two murderers") {
        pack.characters[0].role = Role::murderer;
        const auto r = validate_pack(pack);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == ViolationCode::murderer_count);
    }
    SUBCASE("orphan clue") {
        pack.clue_cards["Ghost"] = {"a footprint"};
        CHECK(has_code(validate_pack(pack), ViolationCode::clue_orphan));
    }
    SUBCASE("duplicate and empty names") {
        pack.characters[1].name = pack.characters[0].name;
        pack.characters[2].name = " ";
        const auto r = validate_pack(pack);
        CHECK(has_code(r, ViolationCode::duplicate_name));
        CHECK(has_code(r, ViolationCode::empty_name));
    }
    SUBCASE("empty timeline, victim and unknown host stage") {
        pack.characters[3].timeline_text = "";
        pack.victim_name = "";
        pack.host_script["intermission"] = {"Break."};
        const auto r = validate_pack(pack);
        CHECK(has_code(r, ViolationCode::empty_timeline));
        CHECK(has_code(r, ViolationCode::empty_victim));
        CHECK(has_code(r, ViolationCode::unknown_host_stage));
    }
}

TEST_CASE("parse errors name the field") {
    CHECK_THROWS_AS(parse_script_pack("[]"), FormatError);
    try {
        parse_script_pack(R"({"schema_version": 1, "title": "x"})");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.code() == "missing-field");
    }
    try {
        parse_script_pack(R"({"schema_version": 9})");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.code() == "schema-version");
    }
}

TEST_CASE("serialize then parse is identity") {
    auto pack = testing::greywater();
    pack.host_script["voting"] = {"Vote now: {options}"};
    pack.host_manual = "Pike did it.";
    pack.characters[0].relationships["Chef Rowan"] = "old friend";
    const auto text = serialize_script_pack(pack);
    const auto again = parse_script_pack(text);
    CHECK(again == pack);
    CHECK(serialize_script_pack(again) == text);
}
