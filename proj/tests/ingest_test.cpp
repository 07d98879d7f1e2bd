#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "evidential/ingest.hpp"
#include "evidential/offline.hpp"

using namespace evidential;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(EVIDENTIAL_SOURCE_DIR) / "tests" / "fixtures";

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

std::string voc(const std::string& objects)
{
    return "<annotation><filename>img7.jpg</filename>" + objects + "</annotation>";
}

std::string object(const std::string& name, const std::string& box)
{
    return "<object><name>" + name + "</name><bndbox>" + box + "</bndbox></object>";
}

} // namespace

TEST(ParseVoc, MinimalObject)
{
    const auto ann = parse_voc_annotation(voc(object("chair", "<xmin>1</xmin><ymin>2</ymin><xmax>10</xmax><ymax>20</ymax>")));
    EXPECT_EQ(ann.image_id, "img7");
    ASSERT_EQ(ann.objects.size(), 1u);
    EXPECT_EQ(ann.objects[0].class_name, "chair");
    EXPECT_EQ(ann.objects[0].box, (Box{1, 2, 10, 20}));
    EXPECT_FALSE(ann.objects[0].difficult);
}

TEST(ParseVoc, NoObjects)
{
    EXPECT_TRUE(parse_voc_annotation(voc("")).objects.empty());
}

TEST(ParseVoc, Errors)
{
    EXPECT_EQ(error_of([] { parse_voc_annotation(voc(object("c", "<xmin>5</xmin><ymin>2</ymin><xmax>5</xmax><ymax>20</ymax>"))); }),
              Errc::InvalidBox);
    EXPECT_EQ(error_of([] { parse_voc_annotation("<annotation><filename>x"); }), Errc::MalformedXml);
    EXPECT_EQ(error_of([] { parse_voc_annotation("<annotation></annotation>"); }), Errc::MissingField);
    EXPECT_EQ(error_of([] { parse_voc_annotation("<other/>"); }), Errc::MissingField);
    EXPECT_EQ(error_of([] { parse_voc_annotation(voc(object("c", "<xmin>1</xmin><ymin>2</ymin><xmax>5</xmax>"))); }),
              Errc::MissingField);
    EXPECT_EQ(error_of([] { parse_voc_annotation(voc(object("c", "<xmin>a</xmin><ymin>2</ymin><xmax>5</xmax><ymax>9</ymax>"))); }),
              Errc::MalformedXml);
    try {
        parse_voc_annotation(voc(object("c", "<xmin>1</xmin><ymin>2</ymin><xmax>5</xmax>")));
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("annotation/object[1]/bndbox/ymax"), std::string::npos) << e.what();
    }
}

TEST(ParseVoc, FixtureFile)
{
    const auto anns = load_voc_directory(kFixtures / "voc" / "Annotations");
    ASSERT_EQ(anns.size(), 3u);
    EXPECT_EQ(anns[0].image_id, "2008_000001");
    ASSERT_EQ(anns[0].objects.size(), 2u);
    EXPECT_EQ(anns[0].objects[1].class_name, "person");
    EXPECT_TRUE(anns[0].objects[1].difficult);
    EXPECT_EQ(anns[0].objects[1].box.x_min, 100.5);
    EXPECT_TRUE(anns[2].objects.empty());
}

TEST(ParseVoc, RoundTrip)
{
    for (const auto& ann : load_voc_directory(kFixtures / "voc" / "Annotations")) {
        EXPECT_EQ(parse_voc_annotation(serialize_voc_annotation(ann)), ann);
    }
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (int trial = 0; trial < 100; ++trial) {
        Annotation ann{"image_" + std::to_string(trial), {}};
        for (int k = 0; k < trial % 4; ++k) {
            const double x = u(rng);
            const double y = u(rng);
            ann.objects.push_back({"cls" + std::to_string(k), {x, y, x + 1 + u(rng), y + 0.5 + u(rng)}, k % 2 == 1});
        }
        EXPECT_EQ(parse_voc_annotation(serialize_voc_annotation(ann)), ann);
    }
}

TEST(ClassCounts, Examples)
{
    const auto one_chair = parse_voc_annotation(voc(object("chair", "<xmin>1</xmin><ymin>2</ymin><xmax>10</xmax><ymax>20</ymax>")));
    const auto counts = class_instance_counts({one_chair, one_chair});
    EXPECT_EQ(counts, (std::map<std::string, std::size_t>{{"chair", 2}}));
    EXPECT_TRUE(class_instance_counts({}).empty());
}

TEST(ClassCounts, FixtureAndDifficult)
{
    const auto anns = load_voc_directory(kFixtures / "voc" / "Annotations");
    const auto all = class_instance_counts(anns);
    EXPECT_EQ(all, (std::map<std::string, std::size_t>{{"car", 1}, {"chair", 2}, {"person", 1}}));
    const auto easy = class_instance_counts(anns, true);
    EXPECT_EQ(easy, (std::map<std::string, std::size_t>{{"car", 1}, {"chair", 2}}));
}

TEST(ClassCounts, Additive)
{
    const auto anns = load_voc_directory(kFixtures / "voc" / "Annotations");
    for (std::size_t cut = 0; cut <= anns.size(); ++cut) {
        const std::vector<Annotation> left(anns.begin(), anns.begin() + static_cast<std::ptrdiff_t>(cut));
        const std::vector<Annotation> right(anns.begin() + static_cast<std::ptrdiff_t>(cut), anns.end());
        auto sum = class_instance_counts(left);
        for (const auto& [k, v] : class_instance_counts(right)) {
            sum[k] += v;
        }
        EXPECT_EQ(sum, class_instance_counts(anns));
    }
}

TEST(LoadVocSplit, ReadsImageSetList)
{
    const auto train = load_voc_split(kFixtures / "voc", "train");
    ASSERT_EQ(train.size(), 2u);
    EXPECT_EQ(train[1].image_id, "2008_000002");
    EXPECT_EQ(error_of([] { load_voc_split(kFixtures / "voc", "missing"); }), Errc::IoError);
    EXPECT_EQ(error_of([] { load_voc_directory(kFixtures / "nope"); }), Errc::IoError);
}

TEST(LoadDetections, Delimited)
{
    EXPECT_EQ(load_detections("img chair 0.5 1 2 3 4\n").size(), 1u);
    EXPECT_TRUE(load_detections("").empty());
    EXPECT_TRUE(load_detections("# nothing\n\n").empty());
    EXPECT_EQ(error_of([] { load_detections("img chair 1.2 1 2 3 4\n"); }), Errc::RangeError);
    EXPECT_EQ(error_of([] { load_detections("img chair 0.5 3 2 1 4\n"); }), Errc::InvalidBox);
    EXPECT_EQ(error_of([] { load_detections("img chair 0.5 1 2 3\n"); }), Errc::ParseError);
    try {
        load_detections("img a 0.5 1 2 3 4\nimg b x 1 2 3 4\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ParseError);
        EXPECT_EQ(e.where(), std::optional<std::size_t>(2));
    }
}

TEST(LoadDetections, Json)
{
    const auto recs = load_detections(R"([{"image_id":"i","class_name":"c","score":0.25,"box":[1,2,3,4]}])",
                                      DetectionFormat::Json);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0], (DetectionRecord{"i", "c", 0.25, {1, 2, 3, 4}}));
    EXPECT_TRUE(load_detections("[]", DetectionFormat::Json).empty());
    EXPECT_EQ(error_of([] { load_detections(R"([{"image_id":"i"}])", DetectionFormat::Json); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { load_detections(R"({"a":1})", DetectionFormat::Json); }), Errc::ParseError);
    EXPECT_EQ(error_of([] {
                  load_detections(R"([{"image_id":"i","class_name":"c","score":2,"box":[1,2,3,4]}])",
                                  DetectionFormat::Json);
              }),
              Errc::RangeError);
}

TEST(LoadDetections, RoundTripBothFormats)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DetectionRecord> recs;
    for (int i = 0; i < 50; ++i) {
        const double x = 100 * u(rng);
        recs.push_back({"im" + std::to_string(i % 7), "k" + std::to_string(i % 3), u(rng), {x, x, x + 1 + u(rng), x + 2}});
    }
    for (auto fmt : {DetectionFormat::Delimited, DetectionFormat::Json}) {
        EXPECT_EQ(load_detections(serialize_detections(recs, fmt), fmt), recs);
    }
}

TEST(EvaluateOffline, Fixture)
{
    const auto recs = load_detections(read_file(kFixtures / "detections.txt"));
    const auto anns = load_voc_directory(kFixtures / "voc" / "Annotations");
    const auto ev = evaluate_offline(recs, anns);
    EXPECT_EQ(ev.class_names, (std::vector<std::string>{"car", "chair", "person"}));
    // car: one TP (IoU 0.83) then one FP on the chair's box
    EXPECT_EQ(ev.detection.average_precision[0], 1.0);
    // chair: TP at 0.9, FP at 0.4, second chair missed
    EXPECT_EQ(ev.detection.average_precision[1], 0.5);
    EXPECT_EQ(ev.detection.average_precision[2], 1.0);
    EXPECT_NEAR(ev.detection.map, 2.5 / 3.0, 1e-12);
    // the car detection on the chair box is a cross-class confusion
    EXPECT_EQ(ev.detection.confusion(1, 0), 1u);
    EXPECT_EQ(ev.micro.tp, 3u);

    const auto easy = evaluate_offline(recs, anns, 0.5, true);
    // the person detection now has nothing to match
    EXPECT_EQ(easy.detection.average_precision[2], 0.0);
    EXPECT_NE(evaluation_to_tsv(ev).find("micro"), std::string::npos);
}

TEST(EvidenceFile, ParseAndFuse)
{
    const auto groups = parse_evidence_file(read_file(kFixtures / "evidence.txt"));
    ASSERT_EQ(groups.size(), 2u);
    const auto soft = fuse_group(groups[0]);
    EXPECT_NEAR(soft.fusion.conflict_k, 0.46, 1e-15);
    EXPECT_NEAR(soft.fusion.combined.mass("A"), 0.42 / 0.54, 1e-15);
    const auto gt = fuse_group(groups[1]);
    EXPECT_NEAR(gt.fusion.conflict_k, 0.3, 1e-15);

    EXPECT_EQ(error_of([] { parse_evidence_file("A:1\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_evidence_file("[g]\nA=1\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_evidence_file("[g\nA:1\n"); }), Errc::ParseError);
    const auto clash = parse_evidence_file("[clash]\nA:1\nB:1\n");
    try {
        fuse_group(clash[0]);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::TotalConflict);
        EXPECT_NE(std::string(e.what()).find("clash"), std::string::npos);
    }
    EXPECT_EQ(error_of([] { fuse_group(parse_evidence_file("[zero]\nA:0 B:0\n")[0]); }), Errc::AllZeroScores);
    EXPECT_EQ(error_of([] { fuse_group(parse_evidence_file("[empty]\n")[0]); }), Errc::EmptyEvidence);
}
