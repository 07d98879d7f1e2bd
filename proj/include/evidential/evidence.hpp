#ifndef EVIDENTIAL_EVIDENCE_HPP
#define EVIDENTIAL_EVIDENCE_HPP

// Mass functions over a frame of class labels and Dempster's rule of
// combination. Focal elements are restricted to the singletons {label_i}
// plus theta, the unknown hypothesis, which stands for the whole frame.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evidential/error.hpp"
#include "evidential/softmax.hpp"

namespace evidential {

/// Tolerance on sum(singletons) + theta == 1.
inline constexpr double kMassTolerance = 1e-9;

/// Conflict at or above 1 - kTotalConflictMargin makes fusion undefined.
inline constexpr double kTotalConflictMargin = 1e-12;

//------------------------------------------------------------------------------
// Frame
//------------------------------------------------------------------------------

/// Ordered set of distinct class labels. Copies share the same immutable
/// storage, so passing frames around by value is cheap.
class Frame {
public:
    explicit Frame(std::vector<std::string> labels)
    {
        if (labels.empty()) {
            throw Error(Errc::ValidationError, "frame must contain at least one label");
        }
        auto data = std::make_shared<Data>();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!data->index.emplace(labels[i], i).second) {
                throw Error(Errc::ValidationError, "duplicate label '" + labels[i] + "' in frame");
            }
        }
        data->labels = std::move(labels);
        data_ = std::move(data);
    }

    std::size_t size() const noexcept { return data_->labels.size(); }
    std::span<const std::string> labels() const noexcept { return data_->labels; }
    const std::string& label(std::size_t i) const { return data_->labels.at(i); }

    std::optional<std::size_t> find(std::string_view label) const
    {
        auto it = data_->index.find(label);
        if (it == data_->index.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::size_t index_of(std::string_view label) const
    {
        if (auto i = find(label)) {
            return *i;
        }
        throw Error(Errc::UnknownLabel, "label '" + std::string(label) + "' is not in the frame");
    }

    friend bool operator==(const Frame& a, const Frame& b)
    {
        return a.data_ == b.data_ || a.data_->labels == b.data_->labels;
    }

private:
    struct Data {
        std::vector<std::string> labels;
        std::map<std::string, std::size_t, std::less<>> index;
    };
    std::shared_ptr<const Data> data_;
};

//------------------------------------------------------------------------------
// MassFunction
//------------------------------------------------------------------------------

class MassFunction {
public:
    MassFunction(Frame frame, std::vector<double> singletons, double theta)
        : frame_(std::move(frame)), singletons_(std::move(singletons)), theta_(theta)
    {
        if (singletons_.size() != frame_.size()) {
            throw Error(Errc::DimensionMismatch, "mass vector size differs from frame size");
        }
        double sum = theta_;
        for (double m : singletons_) {
            check_unit(m);
            sum += m;
        }
        check_unit(theta_);
        if (std::abs(sum - 1.0) > kMassTolerance) {
            throw Error(Errc::InvalidMass, "masses sum to " + std::to_string(sum) + ", expected 1");
        }
    }

    /// All mass on theta: the identity element of Dempster's rule.
    static MassFunction vacuous(Frame frame)
    {
        std::vector<double> zeros(frame.size(), 0.0);
        return {std::move(frame), std::move(zeros), 1.0};
    }

    const Frame& frame() const noexcept { return frame_; }
    std::span<const double> singletons() const noexcept { return singletons_; }
    double theta() const noexcept { return theta_; }
    double mass(std::size_t i) const { return singletons_.at(i); }
    double mass(std::string_view label) const { return singletons_[frame_.index_of(label)]; }

    /// Total mass committed to singletons.
    double committed() const { return std::accumulate(singletons_.begin(), singletons_.end(), 0.0); }

private:
    static void check_unit(double m)
    {
        if (!(m >= 0.0 && m <= 1.0 + kMassTolerance)) {
            throw Error(Errc::InvalidMass, "mass value " + std::to_string(m) + " outside [0,1]");
        }
    }

    Frame frame_;
    std::vector<double> singletons_;
    double theta_;
};

//------------------------------------------------------------------------------
// Constructors
//------------------------------------------------------------------------------

struct EvidenceItem {
    std::string label;
    double score;
};

/// Labeled confidence scores from one source. Labels may repeat.
using RawEvidence = std::vector<EvidenceItem>;

namespace detail {

inline MassFunction normalize_into(const RawEvidence& raw, const Frame& frame)
{
    if (raw.empty()) {
        throw Error(Errc::EmptyEvidence, "no evidence items");
    }
    std::vector<double> scores(frame.size(), 0.0);
    double total = 0.0;
    for (const auto& item : raw) {
        if (!(item.score >= 0.0) || !std::isfinite(item.score)) {
            throw Error(Errc::InvalidScore, "score for '" + item.label + "' must be finite and >= 0");
        }
        scores[frame.index_of(item.label)] += item.score;
        total += item.score;
    }
    if (total <= 0.0) {
        throw Error(Errc::AllZeroScores, "every score is zero");
    }
    for (double& s : scores) {
        s /= total;
    }
    return {frame, std::move(scores), 0.0};
}

} // namespace detail

/// Divides each score by the total. The frame lists labels in order of first
/// appearance; repeated labels are summed.
inline MassFunction normalize_evidence(const RawEvidence& raw)
{
    if (raw.empty()) {
        throw Error(Errc::EmptyEvidence, "no evidence items");
    }
    std::vector<std::string> labels;
    for (const auto& item : raw) {
        if (std::find(labels.begin(), labels.end(), item.label) == labels.end()) {
            labels.push_back(item.label);
        }
    }
    return detail::normalize_into(raw, Frame(std::move(labels)));
}

/// Same as above, over a caller-supplied frame. Labels absent from `raw`
/// receive zero mass.
inline MassFunction normalize_evidence(const RawEvidence& raw, const Frame& frame)
{
    return detail::normalize_into(raw, frame);
}

/// Softmax of detector logits as a mass function. With `top_k`, only the k
/// most probable labels keep their mass and the remainder moves to theta.
inline MassFunction mass_from_softmax(std::span<const double> logits, const Frame& frame,
                                      std::optional<std::size_t> top_k = std::nullopt)
{
    if (logits.size() != frame.size()) {
        throw Error(Errc::DimensionMismatch, "logit count " + std::to_string(logits.size()) +
                                                 " differs from frame size " + std::to_string(frame.size()));
    }
    std::vector<double> probs = softmax(logits);
    if (!top_k) {
        return {frame, std::move(probs), 0.0};
    }
    if (*top_k == 0 || *top_k > frame.size()) {
        throw Error(Errc::OutOfRange, "top_k must lie in [1, " + std::to_string(frame.size()) + "]");
    }
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

    std::vector<double> kept(probs.size(), 0.0);
    double kept_sum = 0.0;
    for (std::size_t r = 0; r < *top_k; ++r) {
        kept[order[r]] = probs[order[r]];
        kept_sum += probs[order[r]];
    }
    return {frame, std::move(kept), std::max(0.0, 1.0 - kept_sum)};
}

/// Ground truth as a source: 1 - epsilon on the true label, epsilon on theta.
inline MassFunction mass_from_ground_truth(std::string_view label, const Frame& frame, double epsilon = 0.0)
{
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
        throw Error(Errc::OutOfRange, "ground-truth epsilon must lie in [0,1)");
    }
    std::vector<double> masses(frame.size(), 0.0);
    masses[frame.index_of(label)] = 1.0 - epsilon;
    return {frame, std::move(masses), epsilon};
}

//------------------------------------------------------------------------------
// Belief and plausibility
//------------------------------------------------------------------------------

/// Tag selecting theta (the whole frame) as the query subset.
struct ThetaTag {
    explicit constexpr ThetaTag() = default;
};
inline constexpr ThetaTag theta{};

namespace detail {

inline std::vector<bool> membership(const Frame& frame, const std::vector<std::string>& subset)
{
    std::vector<bool> in(frame.size(), false);
    for (const auto& label : subset) {
        in[frame.index_of(label)] = true;
    }
    return in;
}

} // namespace detail

/// Bel(A): mass of focal elements contained in A. Theta is contained only
/// in the whole frame.
inline double belief(const MassFunction& m, const std::vector<std::string>& subset)
{
    const auto in = detail::membership(m.frame(), subset);
    double bel = 0.0;
    bool whole = true;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i]) {
            bel += m.mass(i);
        } else {
            whole = false;
        }
    }
    return whole ? bel + m.theta() : bel;
}

inline double belief(const MassFunction& /*m*/, ThetaTag) { return 1.0; }

/// Pl(A): mass of focal elements intersecting A. Theta meets every
/// non-empty A.
inline double plausibility(const MassFunction& m, const std::vector<std::string>& subset)
{
    const auto in = detail::membership(m.frame(), subset);
    double pl = 0.0;
    bool empty = true;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i]) {
            pl += m.mass(i);
            empty = false;
        }
    }
    return empty ? 0.0 : pl + m.theta();
}

inline double plausibility(const MassFunction& m, ThetaTag)
{
    return m.committed() + m.theta();
}

/// Pl(theta) - Bel(theta) with theta as its own focal element: the width of
/// uncommitted belief, which is exactly the theta mass.
inline double ignorance_interval(const MassFunction& m) { return m.theta(); }

//------------------------------------------------------------------------------
// Evidence matrix
//------------------------------------------------------------------------------

/// Outer product of two sources' singleton masses. Diagonal cells feed the
/// combined mass; off-diagonal cells are the conflict.
class EvidenceMatrix {
public:
    EvidenceMatrix(const MassFunction& mx, const MassFunction& my)
        : frame_x_(mx.frame()), frame_y_(my.frame()), cols_(my.frame().size())
    {
        if (!(mx.frame() == my.frame())) {
            throw Error(Errc::FrameMismatch, "evidence matrix requires a shared frame");
        }
        cells_.resize(frame_x_.size() * cols_);
        for (std::size_t i = 0; i < frame_x_.size(); ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                cells_[i * cols_ + j] = mx.mass(i) * my.mass(j);
            }
        }
    }

    std::size_t rows() const noexcept { return frame_x_.size(); }
    std::size_t cols() const noexcept { return cols_; }
    const Frame& frame_x() const noexcept { return frame_x_; }
    const Frame& frame_y() const noexcept { return frame_y_; }
    double operator()(std::size_t i, std::size_t j) const { return cells_.at(i * cols_ + j); }

    double matched(std::size_t i) const { return (*this)(i, i); }

    /// Sum of label-mismatched cells.
    double conflict() const
    {
        double k = 0.0;
        for (std::size_t i = 0; i < rows(); ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                if (i != j) {
                    k += cells_[i * cols_ + j];
                }
            }
        }
        return k;
    }

    double total() const { return std::accumulate(cells_.begin(), cells_.end(), 0.0); }

private:
    Frame frame_x_;
    Frame frame_y_;
    std::size_t cols_;
    std::vector<double> cells_;
};

inline EvidenceMatrix evidence_matrix(const MassFunction& mx, const MassFunction& my) { return {mx, my}; }

//------------------------------------------------------------------------------
// Dempster's rule
//------------------------------------------------------------------------------

struct FusionResult {
    MassFunction combined;
    double conflict_k = 0.0;
    double certainty_phi = 1.0;
    /// Conflict of each pairwise step; a single entry for a pair.
    std::vector<double> step_conflicts;
};

inline double certainty(double k)
{
    if (!(k >= 0.0 && k <= 1.0)) {
        throw Error(Errc::OutOfRange, "conflict must lie in [0,1]");
    }
    return 1.0 - k;
}

inline FusionResult combine_pair(const MassFunction& m1, const MassFunction& m2)
{
    if (!(m1.frame() == m2.frame())) {
        throw Error(Errc::FrameMismatch, "cannot combine masses over different frames");
    }
    const std::size_t n = m1.frame().size();

    // Singleton pairs with different labels are the only empty intersections.
    double k = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = m1.mass(i);
        if (a == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                k += a * m2.mass(j);
            }
        }
    }
    if (k >= 1.0 - kTotalConflictMargin) {
        throw Error(Errc::TotalConflict, "conflict K=" + std::to_string(k) + " leaves nothing to normalize");
    }
    k = std::min(k, 1.0);

    // Normalize by the agreeing mass itself rather than 1 - K, which cancels
    // badly when K is close to 1. With no conflict the products are already
    // normalized, and skipping the division keeps the vacuous identity exact.
    const double t1 = m1.theta();
    const double t2 = m2.theta();
    std::vector<double> combined(n);
    double theta_mass = t1 * t2;
    double norm = theta_mass;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = m1.mass(i);
        const double b = m2.mass(i);
        combined[i] = a * b + a * t2 + t1 * b;
        norm += combined[i];
    }
    if (k > 0.0) {
        for (double& v : combined) {
            v /= norm;
        }
        theta_mass /= norm;
    }
    return {MassFunction(m1.frame(), std::move(combined), theta_mass), k, 1.0 - k, {k}};
}

/// Left fold of combine_pair. The aggregate certainty is the product of the
/// per-step certainties and the aggregate conflict its complement. On total
/// conflict, Error::where() is the index of the mass that could not be folded in.
inline FusionResult combine_sequential(std::span<const MassFunction> masses)
{
    if (masses.empty()) {
        throw Error(Errc::EmptyEvidence, "no masses to combine");
    }
    MassFunction acc = masses.front();
    double phi = 1.0;
    std::vector<double> steps;
    steps.reserve(masses.size() - 1);
    for (std::size_t s = 1; s < masses.size(); ++s) {
        if (!(masses[s].frame() == acc.frame())) {
            throw Error(Errc::FrameMismatch, "mass " + std::to_string(s) + " uses a different frame", s);
        }
        try {
            FusionResult step = combine_pair(acc, masses[s]);
            acc = std::move(step.combined);
            phi *= step.certainty_phi;
            steps.push_back(step.conflict_k);
        } catch (const Error& e) {
            if (e.code() == Errc::TotalConflict) {
                throw Error(Errc::TotalConflict, "total conflict when folding in mass " + std::to_string(s), s);
            }
            throw;
        }
    }
    return {std::move(acc), 1.0 - phi, phi, std::move(steps)};
}

} // namespace evidential

#endif // EVIDENTIAL_EVIDENCE_HPP
