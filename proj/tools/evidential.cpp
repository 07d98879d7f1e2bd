// Experiment harness: train, evaluate, fuse, compare, voc-stats.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evidential/config.hpp"
#include "evidential/experiment.hpp"
#include "evidential/ingest.hpp"
#include "evidential/offline.hpp"
#include "evidential/report.hpp"

namespace fs = std::filesystem;
using namespace evidential;

namespace {

int cmd_train(const fs::path& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
              std::optional<std::string> card)
{
    const ExperimentConfig config = load_experiment_config(config_path, {seed, card});
    const ExperimentReport report = run_experiment(config);
    write_report(report, out_dir);
    std::cout << report_to_tsv(report);
    return 0;
}

int cmd_evaluate(const fs::path& detections_path, const fs::path& annotations_dir, double iou,
                 bool exclude_difficult, const std::optional<fs::path>& out_dir)
{
    const auto format =
        detections_path.extension() == ".json" ? DetectionFormat::Json : DetectionFormat::Delimited;
    const auto records = load_detections(read_file(detections_path), format);
    const auto annotations = load_voc_directory(annotations_dir);
    const OfflineEvaluation ev = evaluate_offline(records, annotations, iou, exclude_difficult);
    const std::string tsv = evaluation_to_tsv(ev);
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_files_atomically({{*out_dir / "metrics.json", evaluation_to_json(ev, iou).dump(2) + "\n"},
                                {*out_dir / "metrics.tsv", tsv}});
    }
    std::cout << tsv;
    return 0;
}

int cmd_fuse(const fs::path& evidence_path, const std::optional<fs::path>& out_dir)
{
    const auto groups = parse_evidence_file(read_file(evidence_path));
    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (const auto& g : groups) {
        results.push_back(fusion_to_json(fuse_group(g)));
    }
    const std::string text = nlohmann::ordered_json{{"groups", std::move(results)}}.dump(2) + "\n";
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_files_atomically({{*out_dir / "fusion.json", text}});
    }
    std::cout << text;
    return 0;
}

int cmd_compare(const std::vector<fs::path>& reports, const std::optional<fs::path>& out_dir)
{
    std::vector<ReportSummary> runs;
    for (const auto& p : reports) {
        runs.push_back(load_report_summary(p));
    }
    const Comparison cmp = compare_reports(std::move(runs));
    const std::string tsv = comparison_to_tsv(cmp);
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_files_atomically({{*out_dir / "comparison.json", comparison_to_json(cmp).dump(2) + "\n"},
                                {*out_dir / "comparison.tsv", tsv}});
    }
    std::cout << tsv;
    return 0;
}

int cmd_voc_stats(const fs::path& annotations_dir, const std::optional<std::string>& split,
                  bool exclude_difficult, const std::optional<fs::path>& out_dir)
{
    const auto annotations =
        split ? load_voc_split(annotations_dir, *split) : load_voc_directory(annotations_dir);
    const auto counts = class_instance_counts(annotations, exclude_difficult);
    std::string tsv = "class\tinstances\n";
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, count] : counts) {
        tsv += name + "\t" + std::to_string(count) + "\n";
        j[name] = count;
    }
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_files_atomically({{*out_dir / "voc_stats.tsv", tsv}, {*out_dir / "voc_stats.json", j.dump(2) + "\n"}});
    }
    std::cout << tsv;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Evidence-fusion loss weighting: experiments and offline tools"};
    app.require_subcommand(1);

    fs::path config_path;
    fs::path train_out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> card;
    auto* train = app.add_subcommand("train", "Run a training experiment and write report.json / report.tsv");
    train->add_option("--config", config_path, "Experiment configuration file")->required();
    train->add_option("--out", train_out, "Output directory")->required();
    train->add_option("--seed", seed, "Override the configured seed");
    train->add_option("--card", card, "Override the scorecard: a, b or a scorecard file");

    fs::path detections_path;
    fs::path annotations_dir;
    double iou = 0.5;
    bool exclude_difficult = false;
    std::optional<fs::path> out_dir;
    auto* evaluate = app.add_subcommand("evaluate", "Score a detection file against VOC annotations");
    evaluate->add_option("detections", detections_path, "Detections (.txt delimited or .json)")->required();
    evaluate->add_option("annotations", annotations_dir, "Directory of VOC XML annotations")->required();
    evaluate->add_option("--iou", iou, "IoU match threshold")->check(CLI::Range(1e-9, 1.0));
    evaluate->add_flag("--exclude-difficult", exclude_difficult, "Drop objects flagged difficult");
    evaluate->add_option("--out", out_dir, "Also write metrics.json / metrics.tsv here");

    fs::path evidence_path;
    auto* fuse = app.add_subcommand("fuse", "Fuse labeled score groups with Dempster's rule");
    fuse->add_option("evidence", evidence_path, "Evidence file")->required();
    fuse->add_option("--out", out_dir, "Also write fusion.json here");

    std::vector<fs::path> reports;
    auto* compare = app.add_subcommand("compare", "Compare best score and best epoch across reports");
    compare->add_option("reports", reports, "report.json files")->required()->expected(2, -1);
    compare->add_option("--out", out_dir, "Also write comparison.json / comparison.tsv here");

    fs::path voc_dir;
    std::optional<std::string> split;
    auto* voc = app.add_subcommand("voc-stats", "Count annotated instances per class");
    voc->add_option("annotations", voc_dir, "Directory of VOC XML files, or a VOC root with --split")->required();
    voc->add_option("--split", split, "Use ImageSets/Main/<split>.txt under a VOC root");
    voc->add_flag("--exclude-difficult", exclude_difficult, "Drop objects flagged difficult");
    voc->add_option("--out", out_dir, "Also write voc_stats.tsv / voc_stats.json here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            return cmd_train(config_path, train_out, seed, card);
        }
        if (*evaluate) {
            return cmd_evaluate(detections_path, annotations_dir, iou, exclude_difficult, out_dir);
        }
        if (*fuse) {
            return cmd_fuse(evidence_path, out_dir);
        }
        if (*compare) {
            return cmd_compare(reports, out_dir);
        }
        if (*voc) {
            return cmd_voc_stats(voc_dir, split, exclude_difficult, out_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
