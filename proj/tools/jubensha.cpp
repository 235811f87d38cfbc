#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "jubensha/agent/offline.hpp"
#include "jubensha/eval/evaluator.hpp"
#include "jubensha/eval/metrics.hpp"
#include "jubensha/eval/offline.hpp"
#include "jubensha/fsutil.hpp"
#include "jubensha/llm/http_backend.hpp"
#include "jubensha/llm/mock_backend.hpp"
#include "jubensha/store/report.hpp"
#include "jubensha/store/run_store.hpp"
#include "jubensha/text.hpp"

namespace fs = std::filesystem;
using namespace jubensha;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitTransport = 3;
constexpr int kExitBudget = 4;

struct BackendFlags {
    std::string backend = "mock";
    std::string mock_fixtures;
    std::string config;
    std::string prices;
    std::string budget;
    std::uint64_t mock_seed = 0;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f) {
    cmd->add_option("--backend", f.backend, "live or mock")->check(CLI::IsMember({"live", "mock"}));
    cmd->add_option("--mock-fixtures", f.mock_fixtures, "Directory of <tag>.txt canned replies for the mock backend");
    cmd->add_option("--config", f.config, "JSON file with base_url, api_key, chat_model, embedding_model");
    cmd->add_option("--prices", f.prices, "Price table JSON");
    cmd->add_option("--budget", f.budget, "Stop once this much has been spent, in currency units");
}

std::shared_ptr<llm::Backend> make_backend(const BackendFlags& f, std::uint64_t seed,
                                           const std::string& chat_model_override = "") {
    if (f.backend == "mock") {
        auto mock = std::make_shared<llm::MockBackend>(seed);
        agent::install_offline_responders(*mock);
        eval::install_offline_eval_responders(*mock);
        if (!f.mock_fixtures.empty()) mock->load_fixture_dir(f.mock_fixtures);
        return mock;
    }
    llm::HttpConfig cfg;
    if (!f.config.empty()) cfg.apply_file(f.config);
    cfg.apply_environment();
    if (!chat_model_override.empty()) cfg.chat_model = chat_model_override;
    return std::make_shared<llm::HttpBackend>(cfg);
}

std::unique_ptr<llm::Gateway> make_gateway(const BackendFlags& f, std::uint64_t seed,
                                           const std::string& chat_model_override = "") {
    llm::GatewayOptions options;
    if (!f.budget.empty()) options.budget_cap = llm::money_from_decimal(f.budget);
    llm::PriceTable prices;
    if (!f.prices.empty()) prices = llm::PriceTable::from_json_text(read_text_file(f.prices));
    return std::make_unique<llm::Gateway>(make_backend(f, seed, chat_model_override), options, prices);
}

agent::PromptLibrary load_prompts(const std::string& dir) {
    return dir.empty() ? agent::PromptLibrary::builtin() : agent::PromptLibrary::from_directory(dir);
}

int cmd_validate(const std::string& pack_path) {
    const auto pack = script::parse_script_pack(read_text_file(pack_path));
    const auto report = script::validate_pack(pack);
    if (report.ok()) {
        std::cout << pack_path << ": ok (" << pack.characters.size() << " characters)\n";
        return kExitOk;
    }
    for (const auto& v : report.violations) {
        std::cout << pack_path << ": " << script::to_string(v.code) << " at " << v.location << ": " << v.message << "\n";
    }
    return kExitValidation;
}

struct RunFlags {
    std::string pack;
    std::string pipeline = "MR+SR+SV";
    int sv_attempts = 3;
    std::uint64_t seed = 0;
    std::string rounds = "2,3";
    int memoryless_votes = 10;
    std::string locale = "en";
    std::string out = "runs";
    std::string run_id;
    std::string prompts;
};

int cmd_run(const RunFlags& r, const BackendFlags& b) {
    const auto pack = script::load_script_pack(r.pack);
    game::GameConfig cfg;
    cfg.seed = r.seed;
    cfg.pipeline = agent::pipeline_from_string(r.pipeline);
    cfg.sv_max_attempts = r.sv_attempts;
    cfg.memoryless_vote_count = r.memoryless_votes;
    cfg.locale = agent::locale_from_string(r.locale);
    const auto parts = text::split_whitespace(text::replace_all(r.rounds, ",", " "));
    if (parts.size() != 2) throw PreconditionError("--rounds takes PRE,POST, e.g. 2,3");
    cfg.open_rounds_pre_clues = std::stoi(parts[0]);
    cfg.open_rounds_post_clues = std::stoi(parts[1]);

    auto gateway = make_gateway(b, cfg.seed);
    const auto prompts = load_prompts(r.prompts);
    auto result = game::run_game(pack, cfg, *gateway, prompts);
    auto bundle = store::make_bundle(r.run_id, r.pack, pack, cfg, std::move(result), *gateway);
    const auto dir = store::persist_run(bundle, r.out);
    const auto& o = bundle.outcome;
    std::cout << "run " << bundle.run_id << " -> " << dir.string() << "\n"
              << "winner: " << game::to_string(o.in_game_winner) << " (murderer " << o.murderer << ")\n"
              << "events: " << bundle.transcript.size() << ", calls: " << bundle.ledger.calls.size()
              << ", cost: " << bundle.ledger.total_cost().format(bundle.ledger.prices.minor_unit_digits) << " "
              << bundle.ledger.prices.currency << "\n";
    return kExitOk;
}

struct EvalFlags {
    std::vector<std::string> runs;
    std::string judge_model;
    std::vector<std::string> qa_banks;
    int per_section = 20;
    std::string access = "pipeline";
    std::string out = "eval";
    std::string prompts;
};

std::string chat_history(const store::RunBundle& bundle, const agent::PromptLibrary& prompts) {
    return game::transcript_text(bundle.transcript, prompts, bundle.config.locale);
}

std::string scripts_text(const script::ScriptPack& pack) {
    std::vector<std::string> parts;
    for (const auto& c : pack.characters) parts.push_back(c.story + "\n" + c.timeline_text);
    return text::join(parts, "\n");
}

int cmd_eval(const EvalFlags& e, const BackendFlags& b) {
    const auto prompts = load_prompts(e.prompts);
    std::vector<eval::QAItem> bank;
    for (const auto& path : e.qa_banks) {
        auto items = eval::load_qa_bank(path);
        bank.insert(bank.end(), items.begin(), items.end());
    }
    const auto access = eval::access_from_string(e.access);

    std::map<std::string, eval::PipelineResults> by_pipeline;
    std::vector<eval::QAItem> all_items;
    std::vector<eval::JudgedAnswer> all_judged;
    std::string judge_model;
    llm::Money spent;
    int digits = 2;
    std::string currency;
    for (const auto& run_dir : e.runs) {
        const auto bundle = store::load_run(run_dir);
        auto gateway = make_gateway(b, bundle.config.seed);
        auto judge = make_gateway(b, bundle.config.seed ^ 0x6a75646765ULL, e.judge_model);
        eval::EvalOptions options;
        options.locale = bundle.config.locale;
        options.retrieval_k = bundle.config.retrieval_k;
        options.judge_model = e.judge_model;
        eval::Evaluator evaluator(*gateway, *judge, prompts, options);
        judge_model = evaluator.judge_model();

        std::vector<eval::QAItem> factual;
        std::vector<eval::QAItem> inferential;
        for (const auto& item : bank) {
            if (!item.game.empty() && item.game != bundle.pack.title) continue;
            (item.kind == eval::QAKind::inferential ? inferential : factual).push_back(item);
        }
        if (factual.empty()) {
            for (const auto& c : bundle.pack.characters) {
                auto items = evaluator.generate_factual_questions(c, e.per_section, bundle.pack.title);
                factual.insert(factual.end(), items.begin(), items.end());
            }
        }
        auto& row = by_pipeline[agent::pipeline_label(bundle.config.pipeline, bundle.config.sv_max_attempts)];
        row.pipeline = agent::pipeline_label(bundle.config.pipeline, bundle.config.sv_max_attempts);
        for (std::size_t i = 0; i < bundle.pack.characters.size(); ++i) {
            const eval::Answerer who{&bundle.pack, &bundle.pack.characters[i], &bundle.memories[i], bundle.config.pipeline};
            if (!factual.empty()) {
                auto judged = evaluator.evaluate_factual(who, factual);
                row.judged.insert(row.judged.end(), judged.begin(), judged.end());
            }
            if (!inferential.empty()) {
                auto judged = evaluator.evaluate_inferential(who, inferential, access);
                row.judged.insert(row.judged.end(), judged.begin(), judged.end());
            }
        }
        row.outcomes.push_back(bundle.outcome);
        row.similarities.push_back(eval::doc_similarity(chat_history(bundle, prompts), scripts_text(bundle.pack), *gateway));
        all_items.insert(all_items.end(), factual.begin(), factual.end());
        all_items.insert(all_items.end(), inferential.begin(), inferential.end());
        spent += gateway->ledger().total_cost() + judge->ledger().total_cost();
        digits = gateway->ledger().prices().minor_unit_digits;
        currency = gateway->ledger().prices().currency;
    }
    std::vector<eval::PipelineResults> results;
    for (auto& [label, r] : by_pipeline) {
        all_judged.insert(all_judged.end(), r.judged.begin(), r.judged.end());
        results.push_back(std::move(r));
    }
    const auto report = eval::aggregate_report(results, judge_model);
    fs::create_directories(e.out);
    write_text_file(fs::path(e.out) / "metrics.json", eval::to_json(report).dump(2) + "\n");
    write_text_file(fs::path(e.out) / "judged.jsonl", eval::write_jsonl(all_judged));
    write_text_file(fs::path(e.out) / "qa.jsonl", eval::write_jsonl(all_items));
    std::cout << store::render_report({report}, store::ReportFormat::table);
    std::cout << "eval cost: " << spent.format(digits) << " " << currency << "\n";
    return kExitOk;
}

int cmd_genqa(const std::string& pack_path, int per_section, const std::string& out, const std::string& prompts_dir,
              const std::string& locale, const BackendFlags& b) {
    const auto pack = script::load_script_pack(pack_path);
    const auto prompts = load_prompts(prompts_dir);
    auto gateway = make_gateway(b, 0);
    eval::EvalOptions options;
    options.locale = agent::locale_from_string(locale);
    eval::Evaluator evaluator(*gateway, *gateway, prompts, options);
    std::vector<eval::QAItem> items;
    for (const auto& c : pack.characters) {
        auto generated = evaluator.generate_factual_questions(c, per_section, pack.title);
        items.insert(items.end(), generated.begin(), generated.end());
    }
    const std::string doc = eval::write_jsonl(items);
    if (out.empty() || out == "-") {
        std::cout << doc;
    } else {
        write_text_file(out, doc);
        std::cout << items.size() << " questions -> " << out << "\n";
    }
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format) {
    std::vector<eval::MetricReport> reports;
    for (const auto& in : inputs) {
        fs::path p = in;
        if (fs::is_directory(p)) p /= "metrics.json";
        const std::string doc = read_text_file(p);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(doc);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(p.string() + ": " + e.what());
        }
        reports.push_back(eval::metric_report_from_json(j));
    }
    std::cout << store::render_report(reports, store::report_format_from_string(format));
    return kExitOk;
}

int exit_code_for(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const game::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (e.cause()) {
            try {
                std::rethrow_exception(e.cause());
            } catch (const llm::BudgetExceeded&) {
                return kExitBudget;
            } catch (const llm::TransportError&) {
                return kExitTransport;
            } catch (const llm::AuthError&) {
                return kExitTransport;
            } catch (...) {
            }
        }
        return kExitOther;
    } catch (const llm::BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const llm::TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const llm::AuthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent murder-mystery game engine and evaluation harness"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    BackendFlags backend;

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "Play one game and persist the run bundle");
    run_cmd->add_option("pack", run.pack, "Script pack JSON")->required();
    run_cmd->add_option("--pipeline", run.pipeline, "NoMR, MR, MR+SR or MR+SR+SV");
    run_cmd->add_option("--sv-attempts", run.sv_attempts, "Verification attempts N")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", run.seed, "Seed for the mock backend and sampling variants");
    run_cmd->add_option("--rounds", run.rounds, "Open questioning rounds before and after the clue reveal, PRE,POST");
    run_cmd->add_option("--memoryless-votes", run.memoryless_votes, "Memoryless voting rounds per player");
    run_cmd->add_option("--locale", run.locale, "en or zh")->check(CLI::IsMember({"en", "zh"}));
    run_cmd->add_option("--out", run.out, "Directory that receives the run directory");
    run_cmd->add_option("--run-id", run.run_id, "Run directory name; derived from pack and config when omitted");
    run_cmd->add_option("--prompts", run.prompts, "Prompt template directory overriding the built-in set");
    add_backend_flags(run_cmd, backend);

    EvalFlags ev;
    auto* eval_cmd = app.add_subcommand("eval", "Run the QA and similarity battery over persisted runs");
    eval_cmd->add_option("runs", ev.runs, "Run directories")->required();
    eval_cmd->add_option("--judge-model", ev.judge_model, "Model used for judging (recorded in the report)");
    eval_cmd->add_option("--qa-bank", ev.qa_banks, "QA bank JSONL; factual questions are generated when none match");
    eval_cmd->add_option("--per-section", ev.per_section, "Generated questions per script section");
    eval_cmd->add_option("--access", ev.access, "pipeline or full_script_access");
    eval_cmd->add_option("--out", ev.out, "Output directory for metrics.json, judged.jsonl and qa.jsonl");
    eval_cmd->add_option("--prompts", ev.prompts, "Prompt template directory overriding the built-in set");
    add_backend_flags(eval_cmd, backend);

    std::string genqa_pack;
    int genqa_per_section = 20;
    std::string genqa_out;
    std::string genqa_prompts;
    std::string genqa_locale = "en";
    auto* genqa_cmd = app.add_subcommand("genqa", "Generate a factual QA bank from a pack");
    genqa_cmd->add_option("pack", genqa_pack, "Script pack JSON")->required();
    genqa_cmd->add_option("--per-section", genqa_per_section, "Questions per section (story, timeline)");
    genqa_cmd->add_option("--out", genqa_out, "Output JSONL file; stdout when omitted");
    genqa_cmd->add_option("--prompts", genqa_prompts, "Prompt template directory");
    genqa_cmd->add_option("--locale", genqa_locale, "en or zh")->check(CLI::IsMember({"en", "zh"}));
    add_backend_flags(genqa_cmd, backend);

    std::vector<std::string> report_inputs;
    std::string report_format = "table";
    auto* report_cmd = app.add_subcommand("report", "Render metrics.json files from eval");
    report_cmd->add_option("inputs", report_inputs, "metrics.json files or eval directories")->required();
    report_cmd->add_option("--format", report_format, "table or machine")->check(CLI::IsMember({"table", "machine"}));

    std::string validate_pack;
    auto* validate_cmd = app.add_subcommand("validate", "Check a script pack");
    validate_cmd->add_option("pack", validate_pack, "Script pack JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

    try {
        if (*run_cmd) return cmd_run(run, backend);
        if (*eval_cmd) return cmd_eval(ev, backend);
        if (*genqa_cmd) return cmd_genqa(genqa_pack, genqa_per_section, genqa_out, genqa_prompts, genqa_locale, backend);
        if (*report_cmd) return cmd_report(report_inputs, report_format);
        if (*validate_cmd) return cmd_validate(validate_pack);
    } catch (...) {
        return exit_code_for(std::current_exception());
    }
    return kExitOther;
}
