#ifndef EVIDENTIAL_REPORT_HPP
#define EVIDENTIAL_REPORT_HPP

// Experiment report files (structured JSON plus a tab-separated table),
// all-or-nothing file output, and the side-by-side run comparison.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evidential/config.hpp"
#include "evidential/error.hpp"
#include "evidential/experiment.hpp"
#include "evidential/text.hpp"

namespace evidential {

using Json = nlohmann::ordered_json;

//------------------------------------------------------------------------------
// Atomic output
//------------------------------------------------------------------------------

/// Writes every file or none: contents go to temporaries beside their
/// targets and are renamed only after all writes succeeded.
inline void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files)
{
    std::vector<std::filesystem::path> temps;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& t : temps) {
            std::filesystem::remove(t, ec);
        }
    };
    for (const auto& [path, content] : files) {
        auto tmp = path;
        tmp += ".tmp";
        temps.push_back(tmp);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) {
            cleanup();
            throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
        }
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::error_code ec;
        std::filesystem::rename(temps[i], files[i].first, ec);
        if (ec) {
            cleanup();
            throw Error(Errc::IoError, "cannot replace '" + files[i].first.string() + "': " + ec.message());
        }
    }
}

//------------------------------------------------------------------------------
// Experiment report
//------------------------------------------------------------------------------

inline Json report_to_json(const ExperimentReport& report)
{
    Json config = Json::object();
    for (const auto& [k, v] : config_echo(report.config)) {
        config[k] = v;
    }
    Json epochs = Json::array();
    for (const EpochRow& r : report.epochs) {
        epochs.push_back({{"epoch", r.epoch},
                          {"factor", r.factor},
                          {"mean_k", r.mean_k},
                          {"train_loss", r.train_loss},
                          {"train_loss_raw", r.train_loss_raw},
                          {"validation_loss", r.validation_loss},
                          {"test_map", r.test_map},
                          {"score", r.score}});
    }
    Json out;
    out["config"] = std::move(config);
    out["initial"] = {{"mean_k", report.initial.mean_k},
                      {"validation_loss", report.initial.validation_loss},
                      {"test_map", report.initial.test_map}};
    out["epochs"] = std::move(epochs);
    out["best_epoch"] = report.best_epoch ? Json(*report.best_epoch) : Json(nullptr);
    out["best_score"] = report.best_epoch ? Json(report.best_score) : Json(nullptr);
    return out;
}

inline std::string report_to_tsv(const ExperimentReport& report)
{
    using text::format_real;
    std::string out;
    for (const auto& [k, v] : config_echo(report.config)) {
        out += "# " + k + " = " + v + "\n";
    }
    out += "# initial_mean_k = " + format_real(report.initial.mean_k) + "\n";
    out += "# initial_validation_loss = " + format_real(report.initial.validation_loss) + "\n";
    out += "# initial_test_map = " + format_real(report.initial.test_map) + "\n";
    out += "epoch\tfactor\tmean_k\ttrain_loss\ttrain_loss_raw\tvalidation_loss\ttest_map\tscore\n";
    for (const EpochRow& r : report.epochs) {
        out += std::to_string(r.epoch) + "\t" + format_real(r.factor) + "\t" + format_real(r.mean_k) + "\t" +
               format_real(r.train_loss) + "\t" + format_real(r.train_loss_raw) + "\t" +
               format_real(r.validation_loss) + "\t" + format_real(r.test_map) + "\t" + format_real(r.score) +
               "\n";
    }
    if (report.best_epoch) {
        out += "# best_epoch = " + std::to_string(*report.best_epoch) + "\n";
        out += "# best_score = " + format_real(report.best_score) + "\n";
    }
    return out;
}

/// Writes report.json and report.tsv into `dir` (created if needed), plus
/// timing.txt with the wall-clock time, which is kept out of the reports so
/// that identical runs produce identical report files.
inline void write_report(const ExperimentReport& report, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error(Errc::IoError, "cannot create '" + dir.string() + "': " + ec.message());
    }
    write_files_atomically({
        {dir / "report.json", report_to_json(report).dump(2) + "\n"},
        {dir / "report.tsv", report_to_tsv(report)},
        {dir / "timing.txt", "wall_clock_seconds = " + text::format_real(report.wall_clock_seconds) + "\n"},
    });
}

//------------------------------------------------------------------------------
// Comparison
//------------------------------------------------------------------------------

struct ReportSummary {
    std::string label;
    std::optional<std::size_t> best_epoch;
    std::optional<double> best_score;
};

inline ReportSummary summarize_report_json(const Json& j, std::string fallback_label)
{
    ReportSummary s;
    try {
        s.label = j.at("config").value("name", fallback_label);
        if (!j.at("best_epoch").is_null()) {
            s.best_epoch = j.at("best_epoch").get<std::size_t>();
        }
        if (!j.at("best_score").is_null()) {
            s.best_score = j.at("best_score").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, "not an experiment report: " + std::string(e.what()));
    }
    return s;
}

inline ReportSummary load_report_summary(const std::filesystem::path& path)
{
    const std::string content = read_file(path);
    Json j;
    try {
        j = Json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, "'" + path.string() + "': " + e.what());
    }
    return summarize_report_json(j, path.string());
}

struct ComparisonRow {
    std::string metric;
    std::vector<std::string> values;
    /// Winning run label, "tie", or "n/a".
    std::string winner;
};

struct Comparison {
    std::vector<std::string> labels;
    std::vector<ComparisonRow> rows;
};

/// Best score: higher wins. Best epoch: earlier wins.
inline Comparison compare_reports(std::vector<ReportSummary> runs)
{
    if (runs.size() < 2) {
        throw Error(Errc::InvalidConfig, "compare needs at least two reports");
    }
    Comparison cmp;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::string label = runs[i].label;
        for (std::size_t j = 0; j < i; ++j) {
            if (runs[j].label == runs[i].label) {
                label += "#" + std::to_string(i + 1);
                break;
            }
        }
        cmp.labels.push_back(label);
    }

    auto pick = [&](auto value_of, bool higher_is_better) {
        std::optional<double> best;
        std::vector<std::size_t> holders;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const std::optional<double> v = value_of(runs[i]);
            if (!v) {
                return std::string("n/a");
            }
            const bool better = !best || (higher_is_better ? *v > *best : *v < *best);
            if (better) {
                best = v;
                holders = {i};
            } else if (*v == *best) {
                holders.push_back(i);
            }
        }
        return holders.size() == 1 ? cmp.labels[holders.front()] : std::string("tie");
    };

    ComparisonRow score{"best_score", {}, {}};
    ComparisonRow epoch{"best_epoch", {}, {}};
    for (const auto& r : runs) {
        score.values.push_back(r.best_score ? text::format_real(*r.best_score) : "n/a");
        epoch.values.push_back(r.best_epoch ? std::to_string(*r.best_epoch) : "n/a");
    }
    score.winner = pick([](const ReportSummary& r) { return r.best_score; }, true);
    epoch.winner = pick(
        [](const ReportSummary& r) -> std::optional<double> {
            if (!r.best_epoch) {
                return std::nullopt;
            }
            return static_cast<double>(*r.best_epoch);
        },
        false);
    cmp.rows = {std::move(score), std::move(epoch)};
    return cmp;
}

inline std::string comparison_to_tsv(const Comparison& cmp)
{
    std::string out = "metric";
    for (const auto& l : cmp.labels) {
        out += "\t" + l;
    }
    out += "\twinner\n";
    for (const auto& row : cmp.rows) {
        out += row.metric;
        for (const auto& v : row.values) {
            out += "\t" + v;
        }
        out += "\t" + row.winner + "\n";
    }
    return out;
}

inline Json comparison_to_json(const Comparison& cmp)
{
    Json rows = Json::array();
    for (const auto& row : cmp.rows) {
        Json values = Json::object();
        for (std::size_t i = 0; i < cmp.labels.size(); ++i) {
            values[cmp.labels[i]] = row.values[i];
        }
        rows.push_back({{"metric", row.metric}, {"values", std::move(values)}, {"winner", row.winner}});
    }
    return {{"runs", cmp.labels}, {"rows", std::move(rows)}};
}

} // namespace evidential

#endif // EVIDENTIAL_REPORT_HPP
