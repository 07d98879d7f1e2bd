#ifndef EVIDENTIAL_SOFTMAX_HPP
#define EVIDENTIAL_SOFTMAX_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace evidential {

/// log(sum(exp(x))) with max subtraction; -inf for an empty input.
inline double log_sum_exp(std::span<const double> x)
{
    if (x.empty()) {
        return -INFINITY;
    }
    const double peak = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (double v : x) {
        sum += std::exp(v - peak);
    }
    return peak + std::log(sum);
}

inline std::vector<double> softmax(std::span<const double> logits)
{
    std::vector<double> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        sum += out[i];
    }
    for (double& v : out) {
        v /= sum;
    }
    return out;
}

} // namespace evidential

#endif // EVIDENTIAL_SOFTMAX_HPP
