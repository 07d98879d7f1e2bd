#ifndef EVIDENTIAL_INJECTION_HPP
#define EVIDENTIAL_INJECTION_HPP

// Uncertainty injection: how the factor is produced (DIU takes the latest
// epoch's conflict, AIU the running mean) and where it is applied (Product
// scales the whole loss, Deep only the classification term).

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evidential/error.hpp"
#include "evidential/scorecard.hpp"

namespace evidential {

struct LossBreakdown {
    double classification = 0.0;
    double localization = 0.0;
    double total = 0.0;

    static LossBreakdown of(double classification, double localization)
    {
        return {classification, localization, classification + localization};
    }

    friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// Per-run history of epoch conflict values, oldest first. Append-only.
class UncertaintyState {
public:
    void record(double k)
    {
        if (!(k >= 0.0 && k <= 1.0)) {
            throw Error(Errc::OutOfRange, "epoch conflict " + std::to_string(k) + " outside [0,1]");
        }
        history_.push_back(k);
    }

    const std::vector<double>& history() const noexcept { return history_; }
    std::size_t size() const noexcept { return history_.size(); }
    bool empty() const noexcept { return history_.empty(); }

    double latest() const
    {
        if (history_.empty()) {
            throw Error(Errc::EmptyHistory, "no epoch conflict recorded yet");
        }
        return history_.back();
    }

    /// K' = mean of the last `window` entries (all entries by default).
    double averaged(std::optional<std::size_t> window = std::nullopt) const
    {
        if (history_.empty()) {
            throw Error(Errc::EmptyHistory, "no epoch conflict recorded yet");
        }
        std::size_t n = history_.size();
        if (window && *window > 0 && *window < n) {
            n = *window;
        }
        double sum = 0.0;
        for (std::size_t i = history_.size() - n; i < history_.size(); ++i) {
            sum += history_[i];
        }
        return sum / static_cast<double>(n);
    }

private:
    std::vector<double> history_;
};

inline UncertaintyState record_epoch_uncertainty(UncertaintyState state, double k)
{
    state.record(k);
    return state;
}

inline double diu_factor(const UncertaintyState& state, const ScoreCard& card)
{
    return lookup(card, state.latest());
}

inline double aiu_factor(const UncertaintyState& state, const ScoreCard& card,
                         std::optional<std::size_t> window = std::nullopt)
{
    return lookup(card, state.averaged(window));
}

namespace detail {

inline void check_factor(double w)
{
    if (!(w > 0.0) || !std::isfinite(w)) {
        throw Error(Errc::NonPositiveFactor, "multiplication factor must be positive and finite");
    }
}

} // namespace detail

inline LossBreakdown apply_product_injection(const LossBreakdown& loss, double w)
{
    detail::check_factor(w);
    return {w * loss.classification, w * loss.localization, w * loss.total};
}

inline LossBreakdown apply_deep_injection(const LossBreakdown& loss, double w)
{
    detail::check_factor(w);
    // total + (w - 1) * cls keeps w == 1 bit-exact even if total was not
    // formed as cls + loc.
    return {w * loss.classification, loss.localization, loss.total + (w - 1.0) * loss.classification};
}

enum class InjectionMethod { Diu, Aiu };
enum class InjectionSite { Product, Deep };

inline std::string_view to_string(InjectionMethod m) { return m == InjectionMethod::Diu ? "diu" : "aiu"; }
inline std::string_view to_string(InjectionSite s) { return s == InjectionSite::Product ? "product" : "deep"; }

struct InjectionConfig {
    InjectionMethod how = InjectionMethod::Diu;
    InjectionSite where = InjectionSite::Product;
    ScoreCard card = scorecard_b();
    /// AIU averaging window in epochs; unset means every epoch so far.
    std::optional<std::size_t> window;
};

/// Weights applied to the (classification, localization) loss terms.
struct LossWeights {
    double classification = 1.0;
    double localization = 1.0;
};

inline LossWeights loss_weights(InjectionSite where, double w)
{
    detail::check_factor(w);
    return where == InjectionSite::Product ? LossWeights{w, w} : LossWeights{w, 1.0};
}

inline LossBreakdown apply_injection(InjectionSite where, const LossBreakdown& loss, double w)
{
    return where == InjectionSite::Product ? apply_product_injection(loss, w) : apply_deep_injection(loss, w);
}

/// Factor for the next epoch. Before any validation pass the factor is 1.
inline double next_factor(const UncertaintyState& state, const InjectionConfig& config)
{
    if (state.empty()) {
        return 1.0;
    }
    return config.how == InjectionMethod::Diu ? diu_factor(state, config.card)
                                              : aiu_factor(state, config.card, config.window);
}

} // namespace evidential

#endif // EVIDENTIAL_INJECTION_HPP
