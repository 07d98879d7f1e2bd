#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "evidential/scorecard.hpp"

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

} // namespace

TEST(ScoreCardA, PrintedBands)
{
    const auto a = scorecard_a();
    const std::vector<std::pair<double, double>> probes = {
        {0.90, 2.3}, {0.70, 2.0}, {0.50, 1.7}, {0.35, 1.4}, {0.25, 1.1}, {0.15, 0.8}, {0.05, 0.5},
    };
    for (const auto& [k, w] : probes) {
        EXPECT_EQ(lookup(a, k), w) << "K=" << k;
    }
    EXPECT_EQ(a.bands().size(), 7u);
}

TEST(ScoreCardB, PrintedBands)
{
    const auto b = scorecard_b();
    const std::vector<std::pair<double, double>> probes = {
        {0.90, 1.5}, {0.70, 1.1}, {0.50, 0.8}, {0.30, 0.5}, {0.10, 0.2},
    };
    for (const auto& [k, w] : probes) {
        EXPECT_EQ(lookup(b, k), w) << "K=" << k;
    }
}

TEST(Lookup, BoundaryConvention)
{
    const auto a = scorecard_a();
    EXPECT_EQ(lookup(a, 0.0), 0.5);
    EXPECT_EQ(lookup(a, 0.10), 0.5);
    EXPECT_EQ(lookup(a, 0.10 + 1e-9), 0.8);
    EXPECT_EQ(lookup(a, 0.20), 0.8);
    EXPECT_EQ(lookup(a, 0.80), 2.0);
    EXPECT_EQ(lookup(a, 1.0), 2.3);
    EXPECT_EQ(lookup(scorecard_b(), 0.0), 0.2);
    EXPECT_EQ(lookup(scorecard_b(), 0.20), 0.2);
    EXPECT_EQ(lookup(scorecard_b(), 0.40), 0.5);
}

TEST(Lookup, RoundingNoiseOnEdgeStaysInLowerBand)
{
    const double mean = (0.4 + 0.2 + 0.3) / 3.0;
    ASSERT_GT(mean, 0.3);
    EXPECT_EQ(lookup(scorecard_a(), mean), 1.1);
}

TEST(Lookup, OutOfRange)
{
    EXPECT_EQ(error_of([] { lookup(scorecard_a(), -1e-9); }), Errc::OutOfRange);
    EXPECT_EQ(error_of([] { lookup(scorecard_a(), 1.0 + 1e-9); }), Errc::OutOfRange);
    EXPECT_EQ(error_of([] { lookup(scorecard_a(), std::nan("")); }), Errc::OutOfRange);
}

TEST(Lookup, TotalOverDenseGrid)
{
    for (const auto& card : {scorecard_a(), scorecard_b()}) {
        for (int i = 0; i <= 10000; ++i) {
            const double k = i * 1e-4;
            int containing = 0;
            for (std::size_t b = 0; b < card.bands().size(); ++b) {
                const Band& band = card.bands()[b];
                const bool in = b == 0 ? (k >= band.lower && k <= band.upper) : (k > band.lower && k <= band.upper);
                containing += in;
            }
            // Grid points within float noise of an edge can sit on either
            // side of it; lookup still returns one factor.
            EXPECT_LE(containing, 1);
            EXPECT_GT(lookup(card, k), 0.0);
        }
    }
}

TEST(ScoreCard, Validation)
{
    EXPECT_EQ(error_of([] { ScoreCard("x", {{0.0, 0.9, 1.0}}); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { ScoreCard("x", {{0.0, 0.5, 1.0}, {0.4, 1.0, 1.0}}); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { ScoreCard("x", {{0.0, 0.4, 1.0}, {0.5, 1.0, 1.0}}); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { ScoreCard("x", {{0.1, 1.0, 1.0}}); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { ScoreCard("x", {{0.0, 1.0, 0.0}}); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { ScoreCard("x", {{0.0, 1.0, -2.0}}); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { ScoreCard("two words", {{0.0, 1.0, 1.0}}); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { ScoreCard("x", {}); }), Errc::ValidationError);
    EXPECT_NO_THROW(ScoreCard("x", {{0.5, 1.0, 1.0}, {0.0, 0.5, 2.0}}));
}

TEST(ParseScorecard, RoundTripsBuiltIns)
{
    EXPECT_EQ(parse_scorecard(serialize_scorecard(scorecard_a())), scorecard_a());
    EXPECT_EQ(parse_scorecard(serialize_scorecard(scorecard_b())), scorecard_b());
}

TEST(ParseScorecard, CommentsAndOrder)
{
    const auto card = parse_scorecard("# custom\n"
                                      "name steep   # trailing\n"
                                      "\n"
                                      "0.50 1.00 3.0\n"
                                      "0.00 0.50 1.0\n");
    EXPECT_EQ(card.name(), "steep");
    EXPECT_EQ(lookup(card, 0.5), 1.0);
    EXPECT_EQ(lookup(card, 0.75), 3.0);
}

TEST(ParseScorecard, Errors)
{
    EXPECT_EQ(error_of([] { parse_scorecard("0.0 1.0 1.0\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_scorecard(""); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_scorecard("name x\n0.0 1.0\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_scorecard("name x\n0.0 1e0 1.0\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_scorecard("name x\n0.0 1.0 abc\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { parse_scorecard("name x\n0.0 0.9 1.0\n"); }), Errc::ValidationError);
    EXPECT_EQ(error_of([] { parse_scorecard("name x\n0.0 0.5 1.0\n0.4 1.0 1.0\n"); }), Errc::ValidationError);

    try {
        parse_scorecard("name x\n# ok\n0.0 1.0 oops\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.where(), std::optional<std::size_t>(3));
    }
}

TEST(ConstantScorecard, EveryKMapsToFactor)
{
    const auto c = constant_scorecard(1.0);
    for (double k : {0.0, 0.1, 0.5, 1.0}) {
        EXPECT_EQ(lookup(c, k), 1.0);
    }
}
