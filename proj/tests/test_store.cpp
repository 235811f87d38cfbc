#include <doctest.h>

#include "jubensha/fsutil.hpp"
#include "jubensha/store/report.hpp"
#include "jubensha/store/run_store.hpp"
#include "jubensha/store/serialize.hpp"
#include "jubensha/text.hpp"
#include "support.hpp"

using namespace jubensha;
using namespace jubensha::store;
namespace fs = std::filesystem;

namespace {

const RunBundle& small_bundle() {
    static const RunBundle bundle = [] {
        auto rig = testing::mock_rig(2, true, {}, testing::fixture_prices());
        game::GameConfig cfg;
        cfg.seed = 2;
        cfg.pipeline = agent::Pipeline::mr;
        cfg.open_rounds_pre_clues = 1;
        cfg.open_rounds_post_clues = 0;
        cfg.memoryless_vote_count = 2;
        auto result = game::run_game(testing::greywater(), cfg, *rig.gateway, agent::PromptLibrary::builtin());
        return make_bundle(default_run_id(testing::greywater(), cfg), "greywater.pack.json", testing::greywater(), cfg,
                           std::move(result), *rig.gateway);
    }();
    return bundle;
}

std::string schema_code(const fs::path& dir) {
    try {
        load_run(dir);
    } catch (const SchemaError& e) {
        return e.code();
    }
    return "";
}

eval::MetricReport one_row_report() {
    eval::MetricReport r;
    r.judge_model = "judge-x";
    eval::MetricRow row;
    row.pipeline = "MR";
    row.own_q = {3, 4};
    row.cq = {1, 4};
    row.games = 2;
    row.civilian_wins = 1;
    row.games_with_valid_ballots = 2;
    row.murderer_id_sum = 0.5;
    r.rows.push_back(row);
    return r;
}

}  // namespace

TEST_CASE("persist writes five files and a manifest") {
    const auto root = testing::scratch_dir("store-fresh");
    const auto dir = persist_run(small_bundle(), root);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
    CHECK(files == 6);
    for (const char* f : {"config.json", "transcript.jsonl", "ballots.jsonl", "memories.jsonl", "ledger.json",
                          "manifest.json"}) {
        CHECK(fs::exists(dir / f));
    }
    CHECK(read_manifest(dir).files.size() == 5);
}

TEST_CASE("persist is idempotent") {
    const auto root = testing::scratch_dir("store-idem");
    const auto dir = persist_run(small_bundle(), root);
    const auto m1 = read_text_file(dir / "manifest.json");
    const auto t1 = fs::last_write_time(dir / "manifest.json");
    CHECK(persist_run(small_bundle(), root) == dir);
    CHECK(read_text_file(dir / "manifest.json") == m1);
    CHECK(fs::last_write_time(dir / "manifest.json") == t1);
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(root)) ++entries;
    CHECK(entries == 1);
}

TEST_CASE("unwritable root") {
    const auto root = testing::scratch_dir("store-bad");
    write_text_file(root / "plain", "not a directory");
    CHECK_THROWS_AS(persist_run(small_bundle(), root / "plain" / "runs"), IoError);
    auto bad = small_bundle();
    bad.run_id = "../escape";
    CHECK_THROWS_AS(persist_run(bad, root), PreconditionError);
}

TEST_CASE("load round trip") {
    const auto root = testing::scratch_dir("store-rt");
    const auto dir = persist_run(small_bundle(), root);
    const auto loaded = load_run(dir);
    const auto& b = small_bundle();
    CHECK(loaded.run_id == b.run_id);
    CHECK(loaded.pack == b.pack);
    CHECK(loaded.config == b.config);
    CHECK(loaded.models == b.models);
    CHECK(loaded.transcript == b.transcript);
    CHECK(loaded.outcome == b.outcome);
    CHECK(loaded.ledger == b.ledger);
    REQUIRE(loaded.memories.size() == b.memories.size());
    for (std::size_t i = 0; i < b.memories.size(); ++i) CHECK(loaded.memories[i].size() == b.memories[i].size());
    CHECK(bundle_files(loaded) == bundle_files(b));

    const auto root2 = testing::scratch_dir("store-rt2");
    const auto dir2 = persist_run(loaded, root2);
    CHECK(read_text_file(dir2 / "manifest.json") == read_text_file(dir / "manifest.json"));
}

TEST_CASE("qa artifacts are optional") {
    auto b = small_bundle();
    eval::QAItem item;
    item.id = "q";
    item.question = "q?";
    item.reference_answer = "a";
    item.source_quote = "a";
    item.owner_character = "Nurse Quill";
    b.qa_items = {item};
    eval::JudgedAnswer j;
    j.item_id = "q";
    j.answerer = "Chef Rowan";
    j.question_class = eval::QuestionClass::cq;
    b.judged = {j};
    const auto root = testing::scratch_dir("store-qa");
    const auto loaded = load_run(persist_run(b, root));
    CHECK(loaded.qa_items == b.qa_items);
    CHECK(loaded.judged == b.judged);
}

TEST_CASE("damaged bundles are rejected") {
    const auto root = testing::scratch_dir("store-damage");
    const auto dir = persist_run(small_bundle(), root);

    SUBCASE("missing ballots") {
        fs::remove(dir / "ballots.jsonl");
        CHECK(schema_code(dir) == "missing-file");
    }
    SUBCASE("tampered transcript") {
        write_text_file(dir / "transcript.jsonl", read_text_file(dir / "transcript.jsonl") + "\n");
        CHECK(schema_code(dir) == "checksum");
    }
    SUBCASE("future schema version") {
        auto m = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
        m["schema_version"] = 2;
        write_text_file(dir / "manifest.json", m.dump(2));
        try {
            load_run(dir);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.code() == "schema-version");
            CHECK(std::string(e.what()).find("2") != std::string::npos);
        }
    }
    SUBCASE("no manifest") {
        fs::remove(dir / "manifest.json");
        CHECK_THROWS_AS(load_run(dir), IoError);
    }
}

TEST_CASE("outcome recomputed from ballots") {
    const auto& b = small_bundle();
    std::vector<game::Ballot> all = b.outcome.ballots;
    all.insert(all.end(), b.outcome.memoryless_ballots.begin(), b.outcome.memoryless_ballots.end());
    CHECK(outcome_from_ballots(b.pack, all) == b.outcome);
}

TEST_CASE("serialize round trips") {
    game::TranscriptEvent e;
    e.turn = 7;
    e.stage = game::Stage::open_q_post_clues;
    e.speaker = "A";
    e.addressee = "B";
    e.utterance = "你好 \"quoted\"";
    e.kind = game::EventKind::answer;
    e.round = 2;
    e.answer = game::AnswerMeta{3, 1, true, true, 4.25, 40, agent::LengthUnit::characters};
    CHECK(transcript_event_from_json(nlohmann::json::parse(to_json(e).dump())) == e);
    game::GameConfig c;
    c.seed = 99;
    c.locale = agent::Locale::zh;
    CHECK(game_config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("report rendering") {
    const auto table = render_report({one_row_report()}, ReportFormat::table);
    const auto lines = text::split_lines(text::trim(table));
    // judge line, header, rule, one row
    CHECK(lines.size() == 4);
    CHECK(table.find("0.750") != std::string::npos);
    CHECK(table.find("0.250") != std::string::npos);
    const auto machine = nlohmann::json::parse(render_report({one_row_report()}, ReportFormat::machine));
    CHECK(machine["rows"][0]["own_q_acc"].get<double>() == 0.75);
    CHECK(machine["rows"][0]["cq_acc"].get<double>() == 0.25);
    CHECK(machine["rows"][0]["mq_acc"].is_null());
    CHECK_THROWS_AS(render_report({}, ReportFormat::table), PreconditionError);
    CHECK(report_format_from_string("json") == ReportFormat::machine);
}

TEST_CASE("report rows follow the ablation order") {
    eval::MetricReport r;
    for (const char* p : {"MR+SR+SV(N=3)", "MR", "NoMR", "MR+SR+SV(N=1)", "MR+SR"}) {
        eval::MetricRow row;
        row.pipeline = p;
        r.rows.push_back(row);
    }
    const auto machine = nlohmann::json::parse(render_report({r}, ReportFormat::machine));
    std::vector<std::string> order;
    for (const auto& row : machine["rows"]) order.push_back(row["pipeline"].get<std::string>());
    CHECK(order == std::vector<std::string>{"NoMR", "MR", "MR+SR", "MR+SR+SV(N=1)", "MR+SR+SV(N=3)"});
}
