#ifndef EVIDENTIAL_METRICS_HPP
#define EVIDENTIAL_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evidential/error.hpp"

namespace evidential {

struct Box {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool valid() const noexcept { return x_min < x_max && y_min < y_max; }
    double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }

    friend bool operator==(const Box&, const Box&) = default;
};

inline double iou(const Box& a, const Box& b)
{
    if (!a.valid() || !b.valid()) {
        throw Error(Errc::DegenerateBox, "IoU needs boxes with min < max on both axes");
    }
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

//------------------------------------------------------------------------------
// Detection matching
//------------------------------------------------------------------------------

struct Detection {
    std::string image_id;
    std::size_t class_id = 0;
    double score = 0.0;
    Box box;
};

struct GroundTruth {
    std::string image_id;
    std::size_t class_id = 0;
    Box box;
};

struct MatchResult {
    /// For each detection, the index of the ground truth it claimed.
    std::vector<std::optional<std::size_t>> detection_match;
    /// For each ground truth, the index of the detection that claimed it.
    std::vector<std::optional<std::size_t>> truth_match;

    std::size_t true_positives() const
    {
        return static_cast<std::size_t>(std::count_if(detection_match.begin(), detection_match.end(),
                                                      [](const auto& m) { return m.has_value(); }));
    }
    std::size_t false_positives() const { return detection_match.size() - true_positives(); }
    std::size_t false_negatives() const { return truth_match.size() - true_positives(); }
};

namespace detail {

inline std::vector<std::size_t> by_descending_score(std::span<const Detection> detections)
{
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });
    return order;
}

inline std::map<std::string, std::vector<std::size_t>, std::less<>> truths_by_image(
    std::span<const GroundTruth> truths)
{
    std::map<std::string, std::vector<std::size_t>, std::less<>> out;
    for (std::size_t g = 0; g < truths.size(); ++g) {
        out[truths[g].image_id].push_back(g);
    }
    return out;
}

/// Greedy matching in descending score order. With `same_class`, a
/// detection may only claim a ground truth of its own class.
inline MatchResult greedy_match(std::span<const Detection> detections, std::span<const GroundTruth> truths,
                                double iou_threshold, bool same_class)
{
    MatchResult result;
    result.detection_match.assign(detections.size(), std::nullopt);
    result.truth_match.assign(truths.size(), std::nullopt);
    const auto per_image = truths_by_image(truths);
    for (std::size_t d : by_descending_score(detections)) {
        const Detection& det = detections[d];
        auto it = per_image.find(det.image_id);
        if (it == per_image.end()) {
            continue;
        }
        std::optional<std::size_t> best;
        double best_iou = -1.0;
        for (std::size_t g : it->second) {
            if (result.truth_match[g] || (same_class && truths[g].class_id != det.class_id)) {
                continue;
            }
            const double overlap = iou(det.box, truths[g].box);
            if (overlap >= iou_threshold && overlap > best_iou) {
                best = g;
                best_iou = overlap;
            }
        }
        if (best) {
            result.detection_match[d] = best;
            result.truth_match[*best] = d;
        }
    }
    return result;
}

} // namespace detail

/// Each detection, taken in descending score order, claims the unmatched
/// same-class ground truth of highest IoU at or above the threshold.
inline MatchResult match_detections(std::span<const Detection> detections, std::span<const GroundTruth> truths,
                                    double iou_threshold = 0.5)
{
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw Error(Errc::OutOfRange, "IoU threshold must lie in (0,1]");
    }
    return detail::greedy_match(detections, truths, iou_threshold, /*same_class=*/true);
}

//------------------------------------------------------------------------------
// Average precision
//------------------------------------------------------------------------------

struct RankedDetection {
    double score = 0.0;
    bool true_positive = false;
};

/// All-point interpolated AP: area under the precision/recall curve after
/// making precision monotone non-increasing. Ties keep input order.
inline double average_precision(std::span<const RankedDetection> detections, std::size_t num_truths)
{
    if (num_truths == 0 || detections.empty()) {
        return 0.0;
    }
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

    std::vector<double> precision(order.size());
    std::vector<double> recall(order.size());
    std::size_t tp = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        tp += detections[order[r]].true_positive ? 1 : 0;
        precision[r] = static_cast<double>(tp) / static_cast<double>(r + 1);
        recall[r] = static_cast<double>(tp) / static_cast<double>(num_truths);
    }
    for (std::size_t r = order.size() - 1; r > 0; --r) {
        precision[r - 1] = std::max(precision[r - 1], precision[r]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        ap += (recall[r] - prev_recall) * precision[r];
        prev_recall = recall[r];
    }
    return ap;
}

inline double mean_average_precision(std::span<const double> per_class_ap)
{
    if (per_class_ap.empty()) {
        throw Error(Errc::NoClasses, "mAP over zero classes");
    }
    return std::accumulate(per_class_ap.begin(), per_class_ap.end(), 0.0) /
           static_cast<double>(per_class_ap.size());
}

//------------------------------------------------------------------------------
// Confusion matrix and P/R/F1
//------------------------------------------------------------------------------

/// counts(i, j): actual class i predicted as class j. For detection,
/// `missed` holds ground truths no prediction claimed and `spurious`
/// predictions that claimed nothing; both stay zero for plain
/// classification.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes)
        : n_(num_classes), counts_(num_classes * num_classes, 0), missed_(num_classes, 0), spurious_(num_classes, 0)
    {
        if (num_classes == 0) {
            throw Error(Errc::NoClasses, "confusion matrix needs at least one class");
        }
    }

    std::size_t num_classes() const noexcept { return n_; }

    std::uint64_t operator()(std::size_t actual, std::size_t predicted) const
    {
        check(actual);
        check(predicted);
        return counts_[actual * n_ + predicted];
    }

    void add(std::size_t actual, std::size_t predicted, std::uint64_t count = 1)
    {
        check(actual);
        check(predicted);
        counts_[actual * n_ + predicted] += count;
    }
    void add_missed(std::size_t actual, std::uint64_t count = 1)
    {
        check(actual);
        missed_[actual] += count;
    }
    void add_spurious(std::size_t predicted, std::uint64_t count = 1)
    {
        check(predicted);
        spurious_[predicted] += count;
    }

    std::uint64_t missed(std::size_t c) const { return missed_.at(c); }
    std::uint64_t spurious(std::size_t c) const { return spurious_.at(c); }

    std::uint64_t row_sum(std::size_t i) const
    {
        check(i);
        std::uint64_t s = 0;
        for (std::size_t j = 0; j < n_; ++j) {
            s += counts_[i * n_ + j];
        }
        return s;
    }
    std::uint64_t column_sum(std::size_t j) const
    {
        check(j);
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            s += counts_[i * n_ + j];
        }
        return s;
    }
    std::uint64_t trace() const
    {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            s += counts_[i * n_ + i];
        }
        return s;
    }
    std::uint64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    void check(std::size_t c) const
    {
        if (c >= n_) {
            throw Error(Errc::IndexOutOfRange, "class index " + std::to_string(c) + " >= " + std::to_string(n_));
        }
    }

    std::size_t n_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> missed_;
    std::vector<std::uint64_t> spurious_;
};

inline ConfusionMatrix confusion_from_labels(std::span<const std::size_t> actual,
                                             std::span<const std::size_t> predicted, std::size_t num_classes)
{
    if (actual.size() != predicted.size()) {
        throw Error(Errc::DimensionMismatch, "label sequences differ in length");
    }
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < actual.size(); ++i) {
        cm.add(actual[i], predicted[i]);
    }
    return cm;
}

/// Detections and truths of all classes matched jointly: an IoU-qualified
/// pair counts at (truth class, predicted class).
inline ConfusionMatrix detection_confusion(std::span<const Detection> detections,
                                           std::span<const GroundTruth> truths, std::size_t num_classes,
                                           double iou_threshold = 0.5)
{
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw Error(Errc::OutOfRange, "IoU threshold must lie in (0,1]");
    }
    const MatchResult m = detail::greedy_match(detections, truths, iou_threshold, /*same_class=*/false);
    ConfusionMatrix cm(num_classes);
    for (std::size_t d = 0; d < detections.size(); ++d) {
        if (m.detection_match[d]) {
            cm.add(truths[*m.detection_match[d]].class_id, detections[d].class_id);
        } else {
            cm.add_spurious(detections[d].class_id);
        }
    }
    for (std::size_t g = 0; g < truths.size(); ++g) {
        if (!m.truth_match[g]) {
            cm.add_missed(truths[g].class_id);
        }
    }
    return cm;
}

struct ClassPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
};

namespace detail {

inline double ratio_or_zero(std::uint64_t num, std::uint64_t den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline ClassPRF prf_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn)
{
    ClassPRF out;
    out.tp = tp;
    out.fp = fp;
    out.fn = fn;
    out.precision = ratio_or_zero(tp, tp + fp);
    out.recall = ratio_or_zero(tp, tp + fn);
    out.f1 = (out.precision > 0.0 && out.recall > 0.0)
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

} // namespace detail

/// Precision, recall and F1 for one class. Zero denominators give 0.
inline ClassPRF class_prf(const ConfusionMatrix& cm, std::size_t class_index)
{
    if (class_index >= cm.num_classes()) {
        throw Error(Errc::IndexOutOfRange, "class index " + std::to_string(class_index) + " out of range");
    }
    const std::uint64_t tp = cm(class_index, class_index);
    const std::uint64_t fp = cm.column_sum(class_index) - tp + cm.spurious(class_index);
    const std::uint64_t fn = cm.row_sum(class_index) - tp + cm.missed(class_index);
    return detail::prf_from_counts(tp, fp, fn);
}

/// Micro average: TP, FP and FN are pooled across classes before dividing.
inline ClassPRF micro_prf(const ConfusionMatrix& cm)
{
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (std::size_t c = 0; c < cm.num_classes(); ++c) {
        const ClassPRF p = class_prf(cm, c);
        tp += p.tp;
        fp += p.fp;
        fn += p.fn;
    }
    return detail::prf_from_counts(tp, fp, fn);
}

//------------------------------------------------------------------------------
// Detection evaluation and Performance Score
//------------------------------------------------------------------------------

struct DetectionEvaluation {
    std::vector<double> average_precision;
    std::vector<std::size_t> num_truths;
    double map = 0.0;
    ConfusionMatrix confusion{1};
};

inline DetectionEvaluation evaluate_detections(std::span<const Detection> detections,
                                               std::span<const GroundTruth> truths, std::size_t num_classes,
                                               double iou_threshold = 0.5)
{
    if (num_classes == 0) {
        throw Error(Errc::NoClasses, "evaluation needs at least one class");
    }
    for (const auto& d : detections) {
        if (d.class_id >= num_classes) {
            throw Error(Errc::IndexOutOfRange, "detection class " + std::to_string(d.class_id) + " out of range");
        }
    }
    for (const auto& g : truths) {
        if (g.class_id >= num_classes) {
            throw Error(Errc::IndexOutOfRange, "ground-truth class " + std::to_string(g.class_id) + " out of range");
        }
    }
    const MatchResult m = match_detections(detections, truths, iou_threshold);

    std::vector<std::vector<RankedDetection>> ranked(num_classes);
    for (std::size_t d = 0; d < detections.size(); ++d) {
        ranked[detections[d].class_id].push_back({detections[d].score, m.detection_match[d].has_value()});
    }
    DetectionEvaluation out;
    out.num_truths.assign(num_classes, 0);
    for (const auto& g : truths) {
        ++out.num_truths[g.class_id];
    }
    out.average_precision.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        out.average_precision[c] = average_precision(ranked[c], out.num_truths[c]);
    }
    out.map = mean_average_precision(out.average_precision);
    out.confusion = detection_confusion(detections, truths, num_classes, iou_threshold);
    return out;
}

struct PerformanceScore {
    double map = 0.0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double score = 0.0;
};

/// mAP minus the summed training and validation losses.
inline PerformanceScore performance_score(double map, double train_loss, double validation_loss)
{
    if (!(map >= 0.0 && map <= 1.0)) {
        throw Error(Errc::OutOfRange, "mAP must lie in [0,1]");
    }
    if (!(train_loss >= 0.0) || !(validation_loss >= 0.0)) {
        throw Error(Errc::OutOfRange, "losses must be non-negative");
    }
    return {map, train_loss, validation_loss, map - (train_loss + validation_loss)};
}

} // namespace evidential

#endif // EVIDENTIAL_METRICS_HPP
