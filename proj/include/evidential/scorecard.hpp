#ifndef EVIDENTIAL_SCORECARD_HPP
#define EVIDENTIAL_SCORECARD_HPP

// Piecewise-constant map from conflict K in [0,1] to a loss multiplication
// factor. Bands cover (lower, upper] except the first, which is [0, upper];
// a K on a shared boundary belongs to the lower band.
//
// Text format:
//
//     # comment
//     name <identifier>
//     <lower> <upper> <factor>
//     ...

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evidential/error.hpp"
#include "evidential/text.hpp"

namespace evidential {

struct Band {
    double lower;
    double upper;
    double factor;

    friend bool operator==(const Band&, const Band&) = default;
};

class ScoreCard {
public:
    /// Sorts bands by lower bound and checks that they tile [0,1].
    ScoreCard(std::string name, std::vector<Band> bands) : name_(std::move(name)), bands_(std::move(bands))
    {
        if (name_.empty() || name_.find_first_of(" \t\r\n#") != std::string::npos) {
            throw Error(Errc::ValidationError, "scorecard name must be a single non-empty token");
        }
        if (bands_.empty()) {
            throw Error(Errc::ValidationError, "scorecard has no bands");
        }
        std::stable_sort(bands_.begin(), bands_.end(),
                         [](const Band& a, const Band& b) { return a.lower < b.lower; });
        for (std::size_t i = 0; i < bands_.size(); ++i) {
            const Band& b = bands_[i];
            if (!(b.factor > 0.0) || !std::isfinite(b.factor)) {
                throw Error(Errc::ValidationError, "band " + std::to_string(i) + " has a non-positive factor");
            }
            if (!(b.lower < b.upper)) {
                throw Error(Errc::ValidationError, "band " + std::to_string(i) + " is empty (lower >= upper)");
            }
            if (i > 0) {
                const double prev = bands_[i - 1].upper;
                if (b.lower > prev) {
                    throw Error(Errc::ValidationError, "gap between " + text::format_real(prev) + " and " +
                                                           text::format_real(b.lower));
                }
                if (b.lower < prev) {
                    throw Error(Errc::ValidationError, "bands overlap at " + text::format_real(b.lower));
                }
            }
        }
        if (bands_.front().lower != 0.0) {
            throw Error(Errc::ValidationError, "gap at bottom: first band starts at " +
                                                   text::format_real(bands_.front().lower) + ", not 0");
        }
        if (bands_.back().upper != 1.0) {
            throw Error(Errc::ValidationError, "gap at top: last band ends at " +
                                                   text::format_real(bands_.back().upper) + ", not 1");
        }
    }

    const std::string& name() const noexcept { return name_; }
    const std::vector<Band>& bands() const noexcept { return bands_; }

    friend bool operator==(const ScoreCard&, const ScoreCard&) = default;

private:
    std::string name_;
    std::vector<Band> bands_;
};

/// Up-weights conflicting epochs: factor grows with K.
inline ScoreCard scorecard_a()
{
    return ScoreCard("a", {
                              {0.80, 1.00, 2.3},
                              {0.60, 0.80, 2.0},
                              {0.40, 0.60, 1.7},
                              {0.30, 0.40, 1.4},
                              {0.20, 0.30, 1.1},
                              {0.10, 0.20, 0.8},
                              {0.00, 0.10, 0.5},
                          });
}

/// Damped variant with every factor at or below 1.5.
inline ScoreCard scorecard_b()
{
    return ScoreCard("b", {
                              {0.80, 1.00, 1.5},
                              {0.60, 0.80, 1.1},
                              {0.40, 0.60, 0.8},
                              {0.20, 0.40, 0.5},
                              {0.00, 0.20, 0.2},
                          });
}

/// Every band carries the same factor.
inline ScoreCard constant_scorecard(double factor, std::string name = "constant")
{
    return ScoreCard(std::move(name), {{0.0, 1.0, factor}});
}

/// Rounding slack on band edges. A mean such as (0.4 + 0.2 + 0.3) / 3 lands
/// at 0.30000000000000004 and should still read as 0.30.
inline constexpr double kBoundarySlack = 1e-12;

inline double lookup(const ScoreCard& card, double k)
{
    if (!(k >= 0.0 && k <= 1.0)) {
        throw Error(Errc::OutOfRange, "K=" + text::format_real(k) + " outside [0,1]");
    }
    for (const Band& b : card.bands()) {
        if (k <= b.upper + kBoundarySlack) {
            return b.factor;
        }
    }
    return card.bands().back().factor; // unreachable: last upper is 1
}

inline std::string serialize_scorecard(const ScoreCard& card)
{
    std::string out = "name " + card.name() + "\n";
    for (const Band& b : card.bands()) {
        out += text::format_fixed(b.lower) + " " + text::format_fixed(b.upper) + " " +
               text::format_fixed(b.factor) + "\n";
    }
    return out;
}

/// Parses then validates; never returns a partially valid card. Parse
/// errors carry the 1-based line number in Error::where().
inline ScoreCard parse_scorecard(std::string_view content)
{
    std::string name;
    std::vector<Band> bands;
    const auto lines = text::split_lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        const auto fields = text::split_ws(text::trim(text::strip_comment(lines[n])));
        if (fields.empty()) {
            continue;
        }
        if (name.empty()) {
            if (fields.size() != 2 || fields[0] != "name") {
                throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 'name <identifier>'",
                            line_no);
            }
            name = std::string(fields[1]);
            continue;
        }
        if (fields.size() != 3) {
            throw Error(Errc::ParseError,
                        "line " + std::to_string(line_no) + ": expected '<lower> <upper> <factor>'", line_no);
        }
        double v[3];
        for (int f = 0; f < 3; ++f) {
            const auto parsed = text::parse_real(fields[f], /*fixed_only=*/true);
            if (!parsed) {
                throw Error(Errc::ParseError,
                            "line " + std::to_string(line_no) + ": '" + std::string(fields[f]) +
                                "' is not a decimal number",
                            line_no);
            }
            v[f] = *parsed;
        }
        bands.push_back({v[0], v[1], v[2]});
    }
    if (name.empty()) {
        throw Error(Errc::ParseError, "missing 'name' line", lines.size());
    }
    return ScoreCard(std::move(name), std::move(bands));
}

} // namespace evidential

#endif // EVIDENTIAL_SCORECARD_HPP
