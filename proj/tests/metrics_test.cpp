#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "evidential/metrics.hpp"
#include "oracles.hpp"

using namespace evidential;

namespace {

Errc error_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an evidential::Error";
    return Errc::IoError;
}

Box random_box(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    const double y = u(rng);
    return {x, y, x + 0.01 + u(rng), y + 0.01 + u(rng)};
}

} // namespace

TEST(Iou, HandCases)
{
    const Box a{0, 0, 2, 2};
    EXPECT_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, Box{3, 3, 4, 4}), 0.0);
    EXPECT_EQ(iou(a, Box{2, 0, 3, 2}), 0.0); // touching edge
    EXPECT_NEAR(iou(a, Box{1, 1, 3, 3}), 1.0 / 7.0, 1e-9);
    EXPECT_NEAR(iou(a, Box{0, 0, 1, 2}), 0.5, 1e-9);
    EXPECT_EQ(error_of([&] { iou(a, Box{1, 1, 1, 3}); }), Errc::DegenerateBox);
    EXPECT_EQ(error_of([&] { iou(Box{2, 0, 0, 2}, a); }), Errc::DegenerateBox);
}

TEST(Iou, SymmetricAndBounded)
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
        const Box a = random_box(rng);
        const Box b = random_box(rng);
        const double v = iou(a, b);
        EXPECT_EQ(v, iou(b, a));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_NEAR(iou(a, a), 1.0, 1e-15);
    }
}

TEST(MatchDetections, Examples)
{
    const std::vector<GroundTruth> gt{{"img", 0, {0, 0, 1, 1}}};
    {
        const std::vector<Detection> d{{"img", 0, 0.9, {0, 0, 1, 1}}};
        const auto m = match_detections(d, gt);
        EXPECT_EQ(m.true_positives(), 1u);
        EXPECT_EQ(m.false_positives(), 0u);
        EXPECT_EQ(m.false_negatives(), 0u);
    }
    {
        const std::vector<Detection> d{{"img", 0, 0.5, {0, 0, 1, 1}}, {"img", 0, 0.9, {0, 0, 1, 0.9}}};
        const auto m = match_detections(d, gt);
        EXPECT_EQ(m.true_positives(), 1u);
        EXPECT_EQ(m.false_positives(), 1u);
        // higher score claims the truth even though its IoU is lower
        EXPECT_TRUE(m.detection_match[1].has_value());
        EXPECT_FALSE(m.detection_match[0].has_value());
    }
    {
        const std::vector<Detection> d{{"img", 0, 0.9, {0, 0, 0.4, 1}}};
        ASSERT_NEAR(iou(d[0].box, gt[0].box), 0.4, 1e-12);
        const auto m = match_detections(d, gt, 0.5);
        EXPECT_EQ(m.false_positives(), 1u);
        EXPECT_EQ(m.false_negatives(), 1u);
    }
    {
        // wrong class or wrong image never matches
        const std::vector<Detection> d{{"img", 1, 0.9, {0, 0, 1, 1}}, {"other", 0, 0.9, {0, 0, 1, 1}}};
        EXPECT_EQ(match_detections(d, gt).true_positives(), 0u);
    }
}

TEST(MatchDetections, PicksHighestIouTruth)
{
    const std::vector<GroundTruth> gt{{"i", 0, {0, 0, 1, 1}}, {"i", 0, {0.1, 0, 1.1, 1}}};
    const std::vector<Detection> d{{"i", 0, 0.9, {0.1, 0, 1.1, 1}}};
    const auto m = match_detections(d, gt);
    EXPECT_EQ(m.detection_match[0], std::optional<std::size_t>(1));
}

TEST(AveragePrecision, Examples)
{
    const std::vector<RankedDetection> one_tp{{0.9, true}};
    EXPECT_EQ(average_precision(one_tp, 1), 1.0);
    const std::vector<RankedDetection> tp_fp{{0.9, true}, {0.8, false}};
    EXPECT_EQ(average_precision(tp_fp, 1), 1.0);
    const std::vector<RankedDetection> fp_tp{{0.9, false}, {0.8, true}};
    EXPECT_EQ(average_precision(fp_tp, 1), 0.5);
    EXPECT_EQ(average_precision(fp_tp, 0), 0.0);
    EXPECT_EQ(average_precision({}, 3), 0.0);
    // input order does not matter, only scores
    const std::vector<RankedDetection> shuffled{{0.8, true}, {0.9, false}};
    EXPECT_EQ(average_precision(shuffled, 1), 0.5);
}

TEST(AveragePrecision, MatchesPointwiseOracleOnAllSmallFixtures)
{
    for (std::size_t n = 1; n <= 6; ++n) {
        for (std::uint32_t pattern = 0; pattern < (1u << n); ++pattern) {
            std::vector<RankedDetection> dets;
            std::size_t tps = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool tp = (pattern >> i) & 1u;
                tps += tp;
                dets.push_back({1.0 - 0.1 * static_cast<double>(i), tp});
            }
            for (std::size_t gts = std::max<std::size_t>(tps, 1); gts <= std::max<std::size_t>(tps, 3); ++gts) {
                const double ap = average_precision(dets, gts);
                EXPECT_NEAR(ap, oracle::average_precision_pointwise(dets, gts), 1e-12);
                EXPECT_GE(ap, 0.0);
                EXPECT_LE(ap, 1.0);
                // a new top-ranked TP (with one more truth to find) never lowers AP
                auto more = dets;
                more.insert(more.begin(), {2.0, true});
                EXPECT_GE(average_precision(more, gts + 1) + 1e-12, ap);
            }
        }
    }
}

TEST(MeanAveragePrecision, Examples)
{
    EXPECT_EQ(mean_average_precision(std::vector<double>{0.5, 0.5}), 0.5);
    EXPECT_EQ(mean_average_precision(std::vector<double>{1.0, 0.0}), 0.5);
    EXPECT_NEAR(mean_average_precision(std::vector<double>{0.35, 0.26, 0.39}), 1.0 / 3.0, 1e-12);
    EXPECT_EQ(error_of([] { mean_average_precision(std::vector<double>{}); }), Errc::NoClasses);
}

TEST(ClassPrf, Examples)
{
    ConfusionMatrix cm(2);
    cm.add(0, 0, 3);
    cm.add(1, 0, 1);
    cm.add(1, 1, 1);
    const auto c0 = class_prf(cm, 0);
    EXPECT_EQ(c0.tp, 3u);
    EXPECT_EQ(c0.fp, 1u);
    EXPECT_EQ(c0.fn, 0u);
    EXPECT_EQ(c0.precision, 0.75);
    EXPECT_EQ(c0.recall, 1.0);
    EXPECT_NEAR(c0.f1, 6.0 / 7.0, 1e-15);

    ConfusionMatrix diag(3);
    diag.add(0, 0, 5);
    diag.add(2, 2, 2);
    EXPECT_EQ(class_prf(diag, 0).f1, 1.0);
    EXPECT_EQ(class_prf(diag, 2).precision, 1.0);
    const auto empty = class_prf(diag, 1);
    EXPECT_EQ(empty.precision, 0.0);
    EXPECT_EQ(empty.recall, 0.0);
    EXPECT_EQ(empty.f1, 0.0);
    EXPECT_EQ(error_of([&] { class_prf(diag, 3); }), Errc::IndexOutOfRange);
}

TEST(MicroPrf, HandSummedFixture)
{
    // TP [3,1], FP [1,1], FN [0,2]
    ConfusionMatrix cm(2);
    cm.add(0, 0, 3);
    cm.add(1, 0, 1);
    cm.add(1, 1, 1);
    cm.add_spurious(1);
    cm.add_missed(1);
    EXPECT_EQ(class_prf(cm, 1).fp, 1u);
    EXPECT_EQ(class_prf(cm, 1).fn, 2u);
    const auto micro = micro_prf(cm);
    EXPECT_NEAR(micro.precision, 4.0 / 6.0, 1e-15);
    EXPECT_NEAR(micro.recall, 4.0 / 6.0, 1e-15);
    EXPECT_NEAR(micro.f1, 2.0 / 3.0, 1e-15);

    EXPECT_EQ(micro_prf(ConfusionMatrix(3)).f1, 0.0);
    ConfusionMatrix diag(2);
    diag.add(0, 0, 4);
    diag.add(1, 1, 4);
    EXPECT_EQ(micro_prf(diag).precision, 1.0);
    EXPECT_EQ(micro_prf(diag).f1, 1.0);
}

TEST(MicroPrf, EqualsAccuracyForSingleLabelClassification)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 5;
        std::vector<std::size_t> actual(50);
        std::vector<std::size_t> predicted(50);
        for (std::size_t i = 0; i < actual.size(); ++i) {
            actual[i] = rng() % n;
            predicted[i] = rng() % n;
        }
        const auto cm = confusion_from_labels(actual, predicted, n);
        EXPECT_EQ(cm.total(), 50u);
        const double accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
        const auto micro = micro_prf(cm);
        EXPECT_NEAR(micro.precision, accuracy, 1e-15);
        EXPECT_NEAR(micro.recall, accuracy, 1e-15);
        std::uint64_t tp_plus_fn = 0;
        for (std::size_t c = 0; c < n; ++c) {
            const auto p = class_prf(cm, c);
            tp_plus_fn += p.tp + p.fn;
            EXPECT_EQ(cm.row_sum(c), p.tp + p.fn);
        }
        EXPECT_EQ(tp_plus_fn, 50u);
    }
}

TEST(ConfusionMatrix, Errors)
{
    EXPECT_EQ(error_of([] { ConfusionMatrix(0); }), Errc::NoClasses);
    ConfusionMatrix cm(2);
    EXPECT_EQ(error_of([&] { cm.add(2, 0); }), Errc::IndexOutOfRange);
    const std::vector<std::size_t> a{0, 1};
    const std::vector<std::size_t> b{0};
    EXPECT_EQ(error_of([&] { confusion_from_labels(a, b, 2); }), Errc::DimensionMismatch);
}

TEST(DetectionConfusion, CrossClassMatches)
{
    const std::vector<GroundTruth> gt{{"i", 0, {0, 0, 1, 1}}, {"i", 1, {2, 2, 3, 3}}, {"j", 1, {0, 0, 1, 1}}};
    const std::vector<Detection> d{
        {"i", 1, 0.9, {0, 0, 1, 1}}, // matches class-0 truth with wrong label
        {"i", 1, 0.8, {2, 2, 3, 3}}, // correct
        {"j", 0, 0.7, {5, 5, 6, 6}}, // spurious
    };
    const auto cm = detection_confusion(d, gt, 2);
    EXPECT_EQ(cm(0, 1), 1u);
    EXPECT_EQ(cm(1, 1), 1u);
    EXPECT_EQ(cm.spurious(0), 1u);
    EXPECT_EQ(cm.missed(1), 1u);
    const auto c1 = class_prf(cm, 1);
    EXPECT_EQ(c1.tp, 1u);
    EXPECT_EQ(c1.fp, 1u);
    EXPECT_EQ(c1.fn, 1u);
}

TEST(EvaluateDetections, PerClassApAndMap)
{
    const std::vector<GroundTruth> gt{{"a", 0, {0, 0, 1, 1}}, {"b", 1, {0, 0, 1, 1}}};
    const std::vector<Detection> d{{"a", 0, 0.9, {0, 0, 1, 1}}, {"b", 1, 0.9, {5, 5, 6, 6}},
                                   {"b", 1, 0.8, {0, 0, 1, 1}}};
    const auto ev = evaluate_detections(d, gt, 2);
    EXPECT_EQ(ev.average_precision[0], 1.0);
    EXPECT_EQ(ev.average_precision[1], 0.5);
    EXPECT_EQ(ev.map, 0.75);
    EXPECT_EQ(ev.num_truths, (std::vector<std::size_t>{1, 1}));
    const std::vector<Detection> bad{{"a", 5, 0.9, {0, 0, 1, 1}}};
    EXPECT_EQ(error_of([&] { evaluate_detections(bad, gt, 2); }), Errc::IndexOutOfRange);
}

TEST(PerformanceScore, Examples)
{
    EXPECT_EQ(performance_score(0, 0, 0).score, 0.0);
    EXPECT_NEAR(performance_score(0.5, 0.3, 0.1).score, 0.1, 1e-12);
    EXPECT_NEAR(performance_score(0.25, 0.35, 0.25).score, -0.35, 1e-12);
    EXPECT_EQ(error_of([] { performance_score(1.5, 0, 0); }), Errc::OutOfRange);
    EXPECT_EQ(error_of([] { performance_score(0.5, -1, 0); }), Errc::OutOfRange);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double m = u(rng);
        const double t = 3 * u(rng);
        const double v = 3 * u(rng);
        EXPECT_NEAR(performance_score(m, t, v).score, m - (t + v), 1e-12);
    }
}
