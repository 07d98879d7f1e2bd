#ifndef EVIDENTIAL_DETECTOR_HPP
#define EVIDENTIAL_DETECTOR_HPP

// Desk-scale detector: seeded synthetic instances (one object each), a
// linear classification head and a linear box-regression head, the
// cross-entropy + smooth-L1 multi-task loss, and Adagrad.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "evidential/error.hpp"
#include "evidential/evidence.hpp"
#include "evidential/injection.hpp"
#include "evidential/metrics.hpp"
#include "evidential/softmax.hpp"

namespace evidential {

//------------------------------------------------------------------------------
// Random numbers
//------------------------------------------------------------------------------

/// SplitMix64 stream with Box-Muller normals. Fully specified here so
/// datasets are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next();
        while (x >= limit) {
            x = next();
        }
        return x % n;
    }

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::uint64_t state_;
};

/// Derives an independent seed for a named sub-stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    Rng r(seed ^ (stream * 0xD1B54A32D192ED03ULL));
    return r.next();
}

//------------------------------------------------------------------------------
// Synthetic dataset
//------------------------------------------------------------------------------

struct SyntheticDatasetConfig {
    std::size_t num_classes = 4;
    std::size_t train = 800;
    std::size_t validation = 200;
    std::size_t test = 200;
    std::size_t feature_dim = 8;
    double class_separation = 3.0;
    double box_noise = 0.03;
    std::uint64_t seed = 1;
};

struct Instance {
    std::vector<double> features;
    std::size_t gt_label = 0;
    Box gt_box;
};

struct Dataset {
    std::vector<std::string> class_names;
    std::vector<std::array<double, 4>> class_boxes;
    std::vector<Instance> train;
    std::vector<Instance> validation;
    std::vector<Instance> test;

    Frame frame() const { return Frame(class_names); }
};

namespace detail {

inline constexpr double kMinBoxSide = 0.01;

inline void clip_interval(double& lo, double& hi)
{
    lo = std::clamp(lo, 0.0, 1.0);
    hi = std::clamp(hi, 0.0, 1.0);
    if (hi - lo < kMinBoxSide) {
        const double mid = std::clamp(0.5 * (lo + hi), 0.5 * kMinBoxSide, 1.0 - 0.5 * kMinBoxSide);
        lo = mid - 0.5 * kMinBoxSide;
        hi = mid + 0.5 * kMinBoxSide;
    }
}

/// Unit-norm centroid directions; orthonormal when feature_dim allows.
inline std::vector<std::vector<double>> centroid_directions(Rng& rng, std::size_t classes, std::size_t dim)
{
    std::vector<std::vector<double>> dirs;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> v(dim);
        double norm = 0.0;
        do {
            for (double& x : v) {
                x = rng.normal();
            }
            if (classes <= dim) {
                for (const auto& u : dirs) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < dim; ++i) {
                        dot += u[i] * v[i];
                    }
                    for (std::size_t i = 0; i < dim; ++i) {
                        v[i] -= dot * u[i];
                    }
                }
            }
            norm = 0.0;
            for (double x : v) {
                norm += x * x;
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-6);
        for (double& x : v) {
            x /= norm;
        }
        dirs.push_back(std::move(v));
    }
    return dirs;
}

} // namespace detail

/// Class c's features are N(centroid_c, I). Centroids sit on orthonormal
/// directions scaled so that every pair of centroids is class_separation
/// apart (exactly when feature_dim >= num_classes). Each class has a
/// template box; instance boxes add box_noise Gaussian jitter.
inline Dataset generate_dataset(const SyntheticDatasetConfig& config)
{
    if (config.num_classes < 2) {
        throw Error(Errc::InvalidConfig, "num_classes must be at least 2");
    }
    if (config.train == 0 || config.validation == 0 || config.test == 0) {
        throw Error(Errc::InvalidConfig, "every split needs at least one instance");
    }
    if (config.feature_dim == 0) {
        throw Error(Errc::InvalidConfig, "feature_dim must be positive");
    }
    if (!(config.class_separation >= 0.0) || !(config.box_noise >= 0.0)) {
        throw Error(Errc::InvalidConfig, "class_separation and box_noise must be non-negative");
    }

    Rng rng(config.seed);
    Dataset ds;
    const std::size_t dim = config.feature_dim;
    const auto dirs = detail::centroid_directions(rng, config.num_classes, dim);
    const double radius = config.class_separation / std::numbers::sqrt2;
    std::vector<std::vector<double>> centroids;
    for (std::size_t c = 0; c < config.num_classes; ++c) {
        ds.class_names.push_back("class" + std::to_string(c));
        std::vector<double> mu(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            mu[i] = radius * dirs[c][i];
        }
        centroids.push_back(std::move(mu));
        const double cx = rng.uniform(0.3, 0.7);
        const double cy = rng.uniform(0.3, 0.7);
        const double w = rng.uniform(0.2, 0.45);
        const double h = rng.uniform(0.2, 0.45);
        ds.class_boxes.push_back({cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h});
    }

    auto make_split = [&](std::size_t count) {
        std::vector<Instance> split;
        split.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            Instance inst;
            inst.gt_label = static_cast<std::size_t>(rng.below(config.num_classes));
            inst.features.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                inst.features[d] = centroids[inst.gt_label][d] + rng.normal();
            }
            const auto& t = ds.class_boxes[inst.gt_label];
            double b[4];
            for (int k = 0; k < 4; ++k) {
                b[k] = t[k] + config.box_noise * rng.normal();
            }
            detail::clip_interval(b[0], b[2]);
            detail::clip_interval(b[1], b[3]);
            inst.gt_box = {b[0], b[1], b[2], b[3]};
            split.push_back(std::move(inst));
        }
        return split;
    };
    ds.train = make_split(config.train);
    ds.validation = make_split(config.validation);
    ds.test = make_split(config.test);
    return ds;
}

//------------------------------------------------------------------------------
// Model
//------------------------------------------------------------------------------

/// Parameters of both heads. Gradients and Adagrad accumulators share the
/// same layout.
struct Parameters {
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    std::vector<double> class_weights; // num_classes x feature_dim, row-major
    std::vector<double> class_bias;    // num_classes
    std::vector<double> box_weights;   // 4 x feature_dim, row-major
    std::vector<double> box_bias;      // 4

    static Parameters zeros(std::size_t num_classes, std::size_t feature_dim)
    {
        return {num_classes,
                feature_dim,
                std::vector<double>(num_classes * feature_dim, 0.0),
                std::vector<double>(num_classes, 0.0),
                std::vector<double>(4 * feature_dim, 0.0),
                std::vector<double>(4, 0.0)};
    }

    bool same_shape(const Parameters& o) const
    {
        return num_classes == o.num_classes && feature_dim == o.feature_dim &&
               class_weights.size() == o.class_weights.size() && class_bias.size() == o.class_bias.size() &&
               box_weights.size() == o.box_weights.size() && box_bias.size() == o.box_bias.size();
    }

    /// Applies f to corresponding scalars of this and `o`.
    template <class F>
    void zip(const Parameters& o, F&& f)
    {
        auto run = [&](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                f(a[i], b[i]);
            }
        };
        run(class_weights, o.class_weights);
        run(class_bias, o.class_bias);
        run(box_weights, o.box_weights);
        run(box_bias, o.box_bias);
    }

    std::vector<double> flatten() const
    {
        std::vector<double> out;
        out.insert(out.end(), class_weights.begin(), class_weights.end());
        out.insert(out.end(), class_bias.begin(), class_bias.end());
        out.insert(out.end(), box_weights.begin(), box_weights.end());
        out.insert(out.end(), box_bias.begin(), box_bias.end());
        return out;
    }

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

using Gradients = Parameters;

struct Model {
    Parameters params;
    Parameters accumulators;

    static Model zeros(std::size_t num_classes, std::size_t feature_dim)
    {
        return {Parameters::zeros(num_classes, feature_dim), Parameters::zeros(num_classes, feature_dim)};
    }

    /// Small Gaussian weights; box bias starts at the unit-square centre box.
    static Model initialize(std::size_t num_classes, std::size_t feature_dim, std::uint64_t seed,
                            double scale = 0.01)
    {
        Model m = zeros(num_classes, feature_dim);
        Rng rng(seed);
        for (double& w : m.params.class_weights) {
            w = scale * rng.normal();
        }
        for (double& w : m.params.box_weights) {
            w = scale * rng.normal();
        }
        m.params.box_bias = {0.25, 0.25, 0.75, 0.75};
        return m;
    }
};

struct Prediction {
    std::vector<double> logits;
    std::array<double, 4> box{};
};

inline Prediction forward(const Model& model, std::span<const double> features)
{
    const Parameters& p = model.params;
    if (features.size() != p.feature_dim) {
        throw Error(Errc::DimensionMismatch, "feature vector has " + std::to_string(features.size()) +
                                                 " entries, model expects " + std::to_string(p.feature_dim));
    }
    Prediction out;
    out.logits.resize(p.num_classes);
    for (std::size_t c = 0; c < p.num_classes; ++c) {
        double z = p.class_bias[c];
        for (std::size_t d = 0; d < p.feature_dim; ++d) {
            z += p.class_weights[c * p.feature_dim + d] * features[d];
        }
        out.logits[c] = z;
    }
    for (std::size_t k = 0; k < 4; ++k) {
        double z = p.box_bias[k];
        for (std::size_t d = 0; d < p.feature_dim; ++d) {
            z += p.box_weights[k * p.feature_dim + d] * features[d];
        }
        out.box[k] = z;
    }
    return out;
}

//------------------------------------------------------------------------------
// Losses and gradients
//------------------------------------------------------------------------------

/// Huber transition point of the localization loss.
inline constexpr double kSmoothL1Beta = 1.0;

inline double smooth_l1(double r)
{
    const double a = std::abs(r);
    return a < kSmoothL1Beta ? 0.5 * r * r / kSmoothL1Beta : a - 0.5 * kSmoothL1Beta;
}

inline double smooth_l1_derivative(double r)
{
    if (std::abs(r) < kSmoothL1Beta) {
        return r / kSmoothL1Beta;
    }
    return r > 0.0 ? 1.0 : -1.0;
}

inline std::array<double, 4> box_residuals(const Prediction& pred, const Box& gt)
{
    return {pred.box[0] - gt.x_min, pred.box[1] - gt.y_min, pred.box[2] - gt.x_max, pred.box[3] - gt.y_max};
}

/// Cross-entropy at the true label plus smooth-L1 over the four box
/// coordinates.
inline LossBreakdown compute_losses(const Prediction& pred, const Instance& instance)
{
    if (instance.gt_label >= pred.logits.size()) {
        throw Error(Errc::IndexOutOfRange, "ground-truth label outside the logit vector");
    }
    const double cls = log_sum_exp(pred.logits) - pred.logits[instance.gt_label];
    double loc = 0.0;
    for (double r : box_residuals(pred, instance.gt_box)) {
        loc += smooth_l1(r);
    }
    return LossBreakdown::of(cls, loc);
}

/// Adds scale * d(w_cls * L_cls + w_loc * L_loc)/d(params) for one instance
/// into `grad` and returns the unweighted losses.
inline LossBreakdown accumulate_gradients(const Model& model, const Instance& instance, LossWeights weights,
                                          double scale, Gradients& grad)
{
    const Parameters& p = model.params;
    if (!grad.same_shape(p)) {
        throw Error(Errc::DimensionMismatch, "gradient buffer does not match the model");
    }
    const Prediction pred = forward(model, instance.features);
    const LossBreakdown loss = compute_losses(pred, instance);
    const std::size_t dim = p.feature_dim;

    const std::vector<double> probs = softmax(pred.logits);
    for (std::size_t c = 0; c < p.num_classes; ++c) {
        const double dz = (probs[c] - (c == instance.gt_label ? 1.0 : 0.0)) * weights.classification * scale;
        grad.class_bias[c] += dz;
        for (std::size_t d = 0; d < dim; ++d) {
            grad.class_weights[c * dim + d] += dz * instance.features[d];
        }
    }
    const auto res = box_residuals(pred, instance.gt_box);
    for (std::size_t k = 0; k < 4; ++k) {
        const double dz = smooth_l1_derivative(res[k]) * weights.localization * scale;
        grad.box_bias[k] += dz;
        for (std::size_t d = 0; d < dim; ++d) {
            grad.box_weights[k * dim + d] += dz * instance.features[d];
        }
    }
    return loss;
}

/// Gradient of the mean weighted loss over a batch.
inline Gradients batch_gradients(const Model& model, std::span<const Instance* const> batch, LossWeights weights)
{
    Gradients g = Parameters::zeros(model.params.num_classes, model.params.feature_dim);
    const double scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
    for (const Instance* inst : batch) {
        accumulate_gradients(model, *inst, weights, scale, g);
    }
    return g;
}

//------------------------------------------------------------------------------
// Adagrad
//------------------------------------------------------------------------------

inline constexpr double kAdagradEpsilon = 1e-10;
inline constexpr double kDefaultLearningRate = 0.001;

/// accumulator += g^2; param -= lr * g / (sqrt(accumulator) + eps).
inline Model adagrad_step(Model model, const Gradients& grad, double learning_rate = kDefaultLearningRate)
{
    if (!grad.same_shape(model.params)) {
        throw Error(Errc::DimensionMismatch, "gradient shape does not match the model");
    }
    if (!(learning_rate > 0.0)) {
        throw Error(Errc::OutOfRange, "learning rate must be positive");
    }
    model.accumulators.zip(grad, [](double& acc, double g) { acc += g * g; });
    auto step = [&](std::vector<double>& param, const std::vector<double>& acc, const std::vector<double>& g) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            param[i] -= learning_rate * g[i] / (std::sqrt(acc[i]) + kAdagradEpsilon);
        }
    };
    step(model.params.class_weights, model.accumulators.class_weights, grad.class_weights);
    step(model.params.class_bias, model.accumulators.class_bias, grad.class_bias);
    step(model.params.box_weights, model.accumulators.box_weights, grad.box_weights);
    step(model.params.box_bias, model.accumulators.box_bias, grad.box_bias);
    return model;
}

//------------------------------------------------------------------------------
// Validation and test-time evaluation
//------------------------------------------------------------------------------

struct ValidationResult {
    double mean_k = 0.0;
    double validation_loss = 0.0;
};

/// Fuses each instance's softmax mass with its exact ground truth and
/// averages the resulting conflict. Also returns the mean total loss.
inline ValidationResult validate_and_measure_uncertainty(const Model& model, std::span<const Instance> split,
                                                         const Frame& frame)
{
    if (split.empty()) {
        throw Error(Errc::EmptyValidationSet, "validation split is empty");
    }
    double k_sum = 0.0;
    double loss_sum = 0.0;
    for (const Instance& inst : split) {
        const Prediction pred = forward(model, inst.features);
        const MassFunction predicted = mass_from_softmax(pred.logits, frame);
        const MassFunction truth = mass_from_ground_truth(frame.label(inst.gt_label), frame);
        k_sum += combine_pair(predicted, truth).conflict_k;
        loss_sum += compute_losses(pred, inst).total;
    }
    const auto n = static_cast<double>(split.size());
    return {k_sum / n, loss_sum / n};
}

/// One detection per instance: argmax label, its softmax score, and the
/// regressed box with coordinates ordered so that min < max.
inline Detection to_detection(const Prediction& pred, std::string image_id)
{
    const std::vector<double> probs = softmax(pred.logits);
    const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    auto ordered = [](double a, double b) {
        double lo = std::min(a, b);
        double hi = std::max(a, b);
        if (!(hi > lo)) {
            hi = lo + 1e-9;
        }
        return std::pair{lo, hi};
    };
    const auto [x0, x1] = ordered(pred.box[0], pred.box[2]);
    const auto [y0, y1] = ordered(pred.box[1], pred.box[3]);
    return {std::move(image_id), best, probs[best], Box{x0, y0, x1, y1}};
}

inline DetectionEvaluation evaluate_split(const Model& model, std::span<const Instance> split,
                                          std::size_t num_classes, double iou_threshold = 0.5)
{
    std::vector<Detection> dets;
    std::vector<GroundTruth> gts;
    dets.reserve(split.size());
    gts.reserve(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        const std::string id = std::to_string(i);
        dets.push_back(to_detection(forward(model, split[i].features), id));
        gts.push_back({id, split[i].gt_label, split[i].gt_box});
    }
    return evaluate_detections(dets, gts, num_classes, iou_threshold);
}

} // namespace evidential

#endif // EVIDENTIAL_DETECTOR_HPP
