#ifndef EVIDENTIAL_EXPERIMENT_HPP
#define EVIDENTIAL_EXPERIMENT_HPP

// Training loop with conflict feedback. Each epoch trains with the factor
// produced by the previous epoch's validation conflict, validates, records
// the new conflict and scores the model on the test split.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "evidential/detector.hpp"
#include "evidential/injection.hpp"
#include "evidential/metrics.hpp"
#include "evidential/scorecard.hpp"

namespace evidential {

struct ExperimentConfig {
    std::string name = "experiment";
    SyntheticDatasetConfig dataset;
    std::uint64_t model_seed = 0;
    std::uint64_t shuffle_seed = 0;
    std::size_t epochs = 40;
    std::size_t batch_size = 16;
    double learning_rate = 0.05;
    double init_scale = 0.01;
    double iou_threshold = 0.5;
    /// Unset means baseline training (factor fixed at 1).
    std::optional<InjectionConfig> injection;
    /// How the scorecard was named in the config ("a", "b" or a path).
    std::string card_source;
    /// Keep per-batch losses in the report (not serialized).
    bool record_batches = false;
};

struct EpochRow {
    std::size_t epoch = 0;
    /// Factor applied while training this epoch.
    double factor = 1.0;
    /// Mean validation conflict measured after this epoch.
    double mean_k = 0.0;
    /// Mean per-instance training objective, after injection.
    double train_loss = 0.0;
    /// Same, before injection.
    double train_loss_raw = 0.0;
    double validation_loss = 0.0;
    double test_map = 0.0;
    double score = 0.0;
};

struct BatchRecord {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    LossBreakdown raw;
    LossBreakdown injected;
};

struct InitialMetrics {
    double mean_k = 0.0;
    double validation_loss = 0.0;
    double test_map = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    InitialMetrics initial;
    std::vector<EpochRow> epochs;
    std::optional<std::size_t> best_epoch;
    double best_score = 0.0;
    double wall_clock_seconds = 0.0;
    std::vector<BatchRecord> batches;
};

/// First epoch whose score reaches `target`, if any.
inline std::optional<std::size_t> first_epoch_reaching(const ExperimentReport& report, double target)
{
    for (const EpochRow& row : report.epochs) {
        if (row.score >= target) {
            return row.epoch;
        }
    }
    return std::nullopt;
}

inline void validate_experiment_config(const ExperimentConfig& config)
{
    if (config.batch_size == 0) {
        throw Error(Errc::InvalidConfig, "batch_size must be positive");
    }
    if (!(config.learning_rate > 0.0)) {
        throw Error(Errc::InvalidConfig, "learning_rate must be positive");
    }
    if (!(config.init_scale >= 0.0)) {
        throw Error(Errc::InvalidConfig, "init_scale must be non-negative");
    }
    if (!(config.iou_threshold > 0.0 && config.iou_threshold <= 1.0)) {
        throw Error(Errc::InvalidConfig, "iou_threshold must lie in (0,1]");
    }
}

/// Loss weights and reported factor for the coming epoch.
inline std::pair<double, LossWeights> epoch_weighting(const ExperimentConfig& config, const UncertaintyState& state)
{
    if (!config.injection) {
        return {1.0, LossWeights{}};
    }
    const double w = next_factor(state, *config.injection);
    return {w, loss_weights(config.injection->where, w)};
}

inline ExperimentReport run_experiment(const ExperimentConfig& config)
{
    validate_experiment_config(config);
    const auto started = std::chrono::steady_clock::now();

    const Dataset data = generate_dataset(config.dataset);
    const Frame frame = data.frame();
    const std::size_t classes = config.dataset.num_classes;
    Model model = Model::initialize(classes, config.dataset.feature_dim, config.model_seed, config.init_scale);
    Rng shuffler(config.shuffle_seed);

    ExperimentReport report;
    report.config = config;
    {
        const ValidationResult v = validate_and_measure_uncertainty(model, data.validation, frame);
        report.initial = {v.mean_k, v.validation_loss,
                          evaluate_split(model, data.test, classes, config.iou_threshold).map};
    }

    UncertaintyState state;
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const Instance*> batch;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto [factor, weights] = epoch_weighting(config, state);
        shuffler.shuffle(order);

        double injected_sum = 0.0;
        double raw_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(&data.train[order[i]]);
            }
            Gradients grad = Parameters::zeros(classes, config.dataset.feature_dim);
            const double scale = 1.0 / static_cast<double>(batch.size());
            LossBreakdown batch_raw;
            LossBreakdown batch_injected;
            for (const Instance* inst : batch) {
                const LossBreakdown raw = accumulate_gradients(model, *inst, weights, scale, grad);
                const LossBreakdown injected =
                    config.injection ? apply_injection(config.injection->where, raw, factor) : raw;
                raw_sum += raw.total;
                injected_sum += injected.total;
                batch_raw.classification += raw.classification * scale;
                batch_raw.localization += raw.localization * scale;
                batch_raw.total += raw.total * scale;
                batch_injected.classification += injected.classification * scale;
                batch_injected.localization += injected.localization * scale;
                batch_injected.total += injected.total * scale;
            }
            if (config.record_batches) {
                report.batches.push_back({epoch, batch_index, batch_raw, batch_injected});
            }
            model = adagrad_step(std::move(model), grad, config.learning_rate);
            ++batch_index;
        }

        const ValidationResult v = validate_and_measure_uncertainty(model, data.validation, frame);
        state.record(std::clamp(v.mean_k, 0.0, 1.0));
        const double test_map = evaluate_split(model, data.test, classes, config.iou_threshold).map;
        const double n = static_cast<double>(order.size());
        const double train_loss = injected_sum / n;
        const PerformanceScore ps = performance_score(test_map, train_loss, v.validation_loss);
        report.epochs.push_back({epoch, factor, v.mean_k, train_loss, raw_sum / n, v.validation_loss, test_map,
                                 ps.score});
    }

    for (const EpochRow& row : report.epochs) {
        if (!report.best_epoch || row.score > report.best_score) {
            report.best_epoch = row.epoch;
            report.best_score = row.score;
        }
    }
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

} // namespace evidential

#endif // EVIDENTIAL_EXPERIMENT_HPP
