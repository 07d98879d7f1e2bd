#ifndef EVIDENTIAL_OFFLINE_HPP
#define EVIDENTIAL_OFFLINE_HPP

// Offline tooling behind the CLI: evaluating detection files against VOC
// annotations and fusing labeled score groups from an evidence file.
//
// Evidence file:
//
//     # comment
//     [group-name]
//     A:0.7 B:0.3        # one source per line, label:score tokens
//     A:1.0

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evidential/error.hpp"
#include "evidential/evidence.hpp"
#include "evidential/ingest.hpp"
#include "evidential/metrics.hpp"
#include "evidential/text.hpp"

namespace evidential {

//------------------------------------------------------------------------------
// Detection evaluation
//------------------------------------------------------------------------------

struct OfflineEvaluation {
    std::vector<std::string> class_names;
    DetectionEvaluation detection;
    std::vector<ClassPRF> per_class;
    ClassPRF micro;
};

/// Class indices follow the sorted union of class names seen in either
/// input.
inline OfflineEvaluation evaluate_offline(const std::vector<DetectionRecord>& records,
                                          const std::vector<Annotation>& annotations, double iou_threshold = 0.5,
                                          bool exclude_difficult = false)
{
    std::set<std::string> names;
    for (const auto& a : annotations) {
        for (const auto& o : a.objects) {
            if (!(exclude_difficult && o.difficult)) {
                names.insert(o.class_name);
            }
        }
    }
    for (const auto& r : records) {
        names.insert(r.class_name);
    }
    OfflineEvaluation out;
    out.class_names.assign(names.begin(), names.end());
    if (out.class_names.empty()) {
        throw Error(Errc::NoClasses, "no classes in detections or annotations");
    }
    auto index = [&](const std::string& name) {
        return static_cast<std::size_t>(std::lower_bound(out.class_names.begin(), out.class_names.end(), name) -
                                        out.class_names.begin());
    };

    std::vector<Detection> dets;
    dets.reserve(records.size());
    for (const auto& r : records) {
        dets.push_back({r.image_id, index(r.class_name), r.score, r.box});
    }
    std::vector<GroundTruth> gts;
    for (const auto& a : annotations) {
        for (const auto& o : a.objects) {
            if (!(exclude_difficult && o.difficult)) {
                gts.push_back({a.image_id, index(o.class_name), o.box});
            }
        }
    }
    out.detection = evaluate_detections(dets, gts, out.class_names.size(), iou_threshold);
    for (std::size_t c = 0; c < out.class_names.size(); ++c) {
        out.per_class.push_back(class_prf(out.detection.confusion, c));
    }
    out.micro = micro_prf(out.detection.confusion);
    return out;
}

inline nlohmann::ordered_json prf_to_json(const ClassPRF& p)
{
    return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
            {"tp", p.tp},               {"fp", p.fp},         {"fn", p.fn}};
}

inline nlohmann::ordered_json evaluation_to_json(const OfflineEvaluation& ev, double iou_threshold)
{
    using Json = nlohmann::ordered_json;
    const ConfusionMatrix& cm = ev.detection.confusion;
    Json classes = Json::array();
    Json matrix = Json::array();
    for (std::size_t c = 0; c < ev.class_names.size(); ++c) {
        classes.push_back({{"class", ev.class_names[c]},
                           {"num_truths", ev.detection.num_truths[c]},
                           {"ap", ev.detection.average_precision[c]},
                           {"prf", prf_to_json(ev.per_class[c])}});
        Json row = Json::array();
        for (std::size_t j = 0; j < cm.num_classes(); ++j) {
            row.push_back(cm(c, j));
        }
        matrix.push_back(std::move(row));
    }
    Json missed = Json::array();
    Json spurious = Json::array();
    for (std::size_t c = 0; c < cm.num_classes(); ++c) {
        missed.push_back(cm.missed(c));
        spurious.push_back(cm.spurious(c));
    }
    return {{"iou_threshold", iou_threshold},
            {"map", ev.detection.map},
            {"classes", std::move(classes)},
            {"confusion",
             {{"labels", ev.class_names}, {"counts", std::move(matrix)}, {"missed", missed}, {"spurious", spurious}}},
            {"micro", prf_to_json(ev.micro)}};
}

inline std::string evaluation_to_tsv(const OfflineEvaluation& ev)
{
    using text::format_real;
    std::string out = "class\tnum_truths\tap\tprecision\trecall\tf1\ttp\tfp\tfn\n";
    for (std::size_t c = 0; c < ev.class_names.size(); ++c) {
        const ClassPRF& p = ev.per_class[c];
        out += ev.class_names[c] + "\t" + std::to_string(ev.detection.num_truths[c]) + "\t" +
               format_real(ev.detection.average_precision[c]) + "\t" + format_real(p.precision) + "\t" +
               format_real(p.recall) + "\t" + format_real(p.f1) + "\t" + std::to_string(p.tp) + "\t" +
               std::to_string(p.fp) + "\t" + std::to_string(p.fn) + "\n";
    }
    out += "micro\t-\t-\t" + format_real(ev.micro.precision) + "\t" + format_real(ev.micro.recall) + "\t" +
           format_real(ev.micro.f1) + "\t" + std::to_string(ev.micro.tp) + "\t" + std::to_string(ev.micro.fp) +
           "\t" + std::to_string(ev.micro.fn) + "\n";
    out += "# map = " + format_real(ev.detection.map) + "\n";
    out += "# confusion (rows actual, columns predicted, then missed)\n";
    const ConfusionMatrix& cm = ev.detection.confusion;
    out += "actual\\predicted";
    for (const auto& n : ev.class_names) {
        out += "\t" + n;
    }
    out += "\tmissed\n";
    for (std::size_t i = 0; i < cm.num_classes(); ++i) {
        out += ev.class_names[i];
        for (std::size_t j = 0; j < cm.num_classes(); ++j) {
            out += "\t" + std::to_string(cm(i, j));
        }
        out += "\t" + std::to_string(cm.missed(i)) + "\n";
    }
    out += "spurious";
    for (std::size_t j = 0; j < cm.num_classes(); ++j) {
        out += "\t" + std::to_string(cm.spurious(j));
    }
    out += "\t-\n";
    return out;
}

//------------------------------------------------------------------------------
// Evidence groups
//------------------------------------------------------------------------------

struct EvidenceGroup {
    std::string name;
    std::vector<RawEvidence> sources;
};

inline std::vector<EvidenceGroup> parse_evidence_file(std::string_view content)
{
    std::vector<EvidenceGroup> groups;
    const auto lines = text::split_lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        const auto body = text::trim(text::strip_comment(lines[n]));
        if (body.empty()) {
            continue;
        }
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3) {
                throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": malformed group header",
                            line_no);
            }
            groups.push_back({std::string(text::trim(body.substr(1, body.size() - 2))), {}});
            continue;
        }
        if (groups.empty()) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": source before any [group]",
                        line_no);
        }
        RawEvidence source;
        for (auto token : text::split_ws(body)) {
            const auto colon = token.rfind(':');
            const auto score = colon == std::string_view::npos ? std::nullopt
                                                               : text::parse_real(token.substr(colon + 1));
            if (colon == 0 || !score) {
                throw Error(Errc::ParseError,
                            "line " + std::to_string(line_no) + ": expected label:score, got '" +
                                std::string(token) + "'",
                            line_no);
            }
            source.push_back({std::string(token.substr(0, colon)), *score});
        }
        groups.back().sources.push_back(std::move(source));
    }
    return groups;
}

struct GroupFusion {
    std::string name;
    std::vector<MassFunction> sources;
    FusionResult fusion;
};

/// Normalizes each source over the group's frame (labels in order of first
/// appearance) and folds them with Dempster's rule. Errors name the group.
inline GroupFusion fuse_group(const EvidenceGroup& group)
{
    try {
        if (group.sources.empty()) {
            throw Error(Errc::EmptyEvidence, "group has no sources");
        }
        std::vector<std::string> labels;
        for (const auto& src : group.sources) {
            for (const auto& item : src) {
                if (std::find(labels.begin(), labels.end(), item.label) == labels.end()) {
                    labels.push_back(item.label);
                }
            }
        }
        const Frame frame(std::move(labels));
        std::vector<MassFunction> masses;
        for (const auto& src : group.sources) {
            masses.push_back(normalize_evidence(src, frame));
        }
        FusionResult fused = combine_sequential(masses);
        return {group.name, std::move(masses), std::move(fused)};
    } catch (const Error& e) {
        throw Error(e.code(), "group '" + group.name + "': " + e.what(), e.where());
    }
}

inline nlohmann::ordered_json mass_to_json(const MassFunction& m)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < m.frame().size(); ++i) {
        j[m.frame().label(i)] = m.mass(i);
    }
    j["theta"] = m.theta();
    return j;
}

inline nlohmann::ordered_json fusion_to_json(const GroupFusion& g)
{
    using Json = nlohmann::ordered_json;
    Json sources = Json::array();
    for (const auto& m : g.sources) {
        sources.push_back(mass_to_json(m));
    }
    return {{"group", g.name},
            {"frame", std::vector<std::string>(g.fusion.combined.frame().labels().begin(),
                                               g.fusion.combined.frame().labels().end())},
            {"sources", std::move(sources)},
            {"combined", mass_to_json(g.fusion.combined)},
            {"conflict_k", g.fusion.conflict_k},
            {"certainty_phi", g.fusion.certainty_phi},
            {"step_conflicts", g.fusion.step_conflicts}};
}

} // namespace evidential

#endif // EVIDENTIAL_OFFLINE_HPP
