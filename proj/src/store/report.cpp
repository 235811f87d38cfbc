#include "jubensha/store/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

#include "jubensha/errors.hpp"
#include "jubensha/text.hpp"

namespace jubensha::store {

ReportFormat report_format_from_string(std::string_view s) {
    if (s == "table") return ReportFormat::table;
    if (s == "machine" || s == "json") return ReportFormat::machine;
    throw PreconditionError("unknown report format '" + std::string(s) + "'");
}

namespace {

std::tuple<int, int, std::string> ablation_key(const std::string& label) {
    if (label == "NoMR") return {0, 0, label};
    if (label == "MR") return {1, 0, label};
    if (label == "MR+SR") return {2, 0, label};
    if (text::starts_with(label, "MR+SR+SV")) {
        int n = 0;
        if (const auto p = label.find("N="); p != std::string::npos) {
            for (std::size_t i = p + 2; i < label.size() && label[i] >= '0' && label[i] <= '9'; ++i) {
                n = n * 10 + (label[i] - '0');
            }
        }
        return {3, n, label};
    }
    return {4, 0, label};
}

std::string fixed3(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

struct Cells {
    std::string pipeline;
    std::vector<std::optional<double>> values;
};

const std::vector<std::string>& headers() {
    static const std::vector<std::string> h = {"Pipeline", "Own Q",      "CQ",         "MQ",        "Other's Q",
                                               "Inf Overall", "Inf Informed", "Civ Win", "Murderer ID",
                                               "Embedding",  "TF-IDF",     "Trigrams"};
    return h;
}

const std::vector<std::string>& machine_keys() {
    static const std::vector<std::string> k = {"own_q_acc",          "cq_acc",
                                               "mq_acc",             "others_avg_acc",
                                               "overall_inferential_acc", "informed_inferential_acc",
                                               "civilian_win_rate",  "murderer_id_acc",
                                               "embedding_cosine",   "tfidf_cosine",
                                               "trigram_jaccard"};
    return k;
}

Cells cells_of(const eval::MetricRow& r) {
    Cells c{r.pipeline, {r.own_q_acc(), r.cq_acc(), r.mq_acc(), r.others_avg_acc(), r.overall_inferential_acc(),
                         r.informed_inferential_acc(), r.civilian_win_rate(), r.murderer_id_acc()}};
    if (r.similarity) {
        c.values.insert(c.values.end(), {r.similarity->embedding_cosine, r.similarity->tfidf_cosine,
                                         r.similarity->trigram_jaccard});
    } else {
        c.values.insert(c.values.end(), 3, std::nullopt);
    }
    return c;
}

}  // namespace

std::string render_report(const std::vector<eval::MetricReport>& reports, ReportFormat format) {
    if (reports.empty()) throw PreconditionError("render_report needs at least one report");
    std::vector<Cells> rows;
    std::set<std::string> judges;
    for (const auto& rep : reports) {
        if (!rep.judge_model.empty()) judges.insert(rep.judge_model);
        for (const auto& r : rep.rows) rows.push_back(cells_of(r));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Cells& a, const Cells& b) { return ablation_key(a.pipeline) < ablation_key(b.pipeline); });
    const std::string judge_list = text::join(std::vector<std::string>(judges.begin(), judges.end()), ", ");

    if (format == ReportFormat::machine) {
        nlohmann::ordered_json j;
        j["judge_models"] = std::vector<std::string>(judges.begin(), judges.end());
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json row;
            row["pipeline"] = r.pipeline;
            for (std::size_t i = 0; i < r.values.size(); ++i) {
                row[machine_keys()[i]] = r.values[i] ? nlohmann::ordered_json(*r.values[i]) : nlohmann::ordered_json(nullptr);
            }
            out.push_back(std::move(row));
        }
        j["rows"] = std::move(out);
        return j.dump(2) + "\n";
    }

    std::vector<std::vector<std::string>> table{headers()};
    for (const auto& r : rows) {
        std::vector<std::string> line{r.pipeline};
        for (const auto& v : r.values) line.push_back(fixed3(v));
        table.push_back(std::move(line));
    }
    std::vector<std::size_t> width(headers().size(), 0);
    for (const auto& line : table) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], text::code_point_count(line[i]));
    }
    std::string out = "judge: " + (judge_list.empty() ? std::string("-") : judge_list) + "\n";
    for (std::size_t li = 0; li < table.size(); ++li) {
        std::string row;
        for (std::size_t i = 0; i < table[li].size(); ++i) {
            const std::string& cell = table[li][i];
            const std::string pad(width[i] - text::code_point_count(cell), ' ');
            row += i == 0 ? cell + pad : "  " + pad + cell;
        }
        out += text::rtrim_copy(row) + "\n";
        if (li == 0) {
            std::size_t total = 0;
            for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i ? 2 : 0);
            out += std::string(total, '-') + "\n";
        }
    }
    return out;
}

}  // namespace jubensha::store
