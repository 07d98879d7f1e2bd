#ifndef EVIDENTIAL_CONFIG_HPP
#define EVIDENTIAL_CONFIG_HPP

// Experiment configuration: `key = value` lines, '#' starts a comment.
//
//     name = diu_product_b
//     seed = 1                # required; no wall-clock seeding
//     mode = injection        # baseline | injection
//     how = diu               # diu | aiu
//     where = product         # product | deep
//     card = b                # a | b | path to a scorecard file
//
// See README.md for the full key list.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evidential/detector.hpp"
#include "evidential/error.hpp"
#include "evidential/experiment.hpp"
#include "evidential/scorecard.hpp"
#include "evidential/text.hpp"

namespace evidential {

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoError, "cannot read '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Resolves "a", "b" or a scorecard file path (relative paths against
/// `base_dir`).
inline ScoreCard resolve_scorecard(std::string_view source, const std::filesystem::path& base_dir = {})
{
    if (source == "a" || source == "A") {
        return scorecard_a();
    }
    if (source == "b" || source == "B") {
        return scorecard_b();
    }
    std::filesystem::path path(source);
    if (path.is_relative() && !base_dir.empty()) {
        path = base_dir / path;
    }
    return parse_scorecard(read_file(path));
}

namespace detail {

template <class T>
T config_number(std::string_view key, std::string_view value, std::size_t line)
{
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = text::parse_real(value)) {
            return *v;
        }
    } else {
        if (auto v = text::parse_u64(value)) {
            return static_cast<T>(*v);
        }
    }
    throw Error(Errc::ParseError,
                "line " + std::to_string(line) + ": bad value '" + std::string(value) + "' for " + std::string(key),
                line);
}

} // namespace detail

/// Command-line values that replace the corresponding config keys.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> card;
};

/// Parses the key/value text into an ExperimentConfig. Unknown keys and a
/// missing `seed` are errors. `seed` also derives model_seed and
/// shuffle_seed unless those are given.
inline ExperimentConfig parse_experiment_config(std::string_view content,
                                                const std::filesystem::path& base_dir = {},
                                                const ConfigOverrides& overrides = {})
{
    std::map<std::string, std::pair<std::string, std::size_t>, std::less<>> entries;
    const auto lines = text::split_lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        const auto body = text::trim(text::strip_comment(lines[n]));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
        }
        const std::string key(text::trim(body.substr(0, eq)));
        const std::string value(text::trim(body.substr(eq + 1)));
        if (key.empty() || value.empty()) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": empty key or value", line_no);
        }
        if (!entries.emplace(key, std::pair{value, line_no}).second) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'",
                        line_no);
        }
    }

    ExperimentConfig cfg;
    auto take = [&](std::string_view key) -> std::optional<std::pair<std::string, std::size_t>> {
        auto it = entries.find(key);
        if (it == entries.end()) {
            return std::nullopt;
        }
        auto v = it->second;
        entries.erase(it);
        return v;
    };
    auto number = [&]<class T>(std::string_view key, T& out) {
        if (auto v = take(key)) {
            out = detail::config_number<T>(key, v->first, v->second);
        }
    };

    const auto seed = take("seed");
    if (!seed) {
        throw Error(Errc::InvalidConfig, "'seed' is required");
    }
    cfg.dataset.seed = overrides.seed ? *overrides.seed
                                      : detail::config_number<std::uint64_t>("seed", seed->first, seed->second);
    cfg.model_seed = derive_seed(cfg.dataset.seed, 1);
    cfg.shuffle_seed = derive_seed(cfg.dataset.seed, 2);

    if (auto v = take("name")) {
        cfg.name = v->first;
    }
    number("model_seed", cfg.model_seed);
    number("shuffle_seed", cfg.shuffle_seed);
    number("num_classes", cfg.dataset.num_classes);
    number("train", cfg.dataset.train);
    number("validation", cfg.dataset.validation);
    number("test", cfg.dataset.test);
    number("feature_dim", cfg.dataset.feature_dim);
    number("class_separation", cfg.dataset.class_separation);
    number("box_noise", cfg.dataset.box_noise);
    number("epochs", cfg.epochs);
    number("batch_size", cfg.batch_size);
    number("learning_rate", cfg.learning_rate);
    number("init_scale", cfg.init_scale);
    number("iou_threshold", cfg.iou_threshold);

    std::string mode = "baseline";
    if (auto v = take("mode")) {
        mode = v->first;
    }
    auto how = take("how");
    auto where = take("where");
    auto card = take("card");
    auto window = take("aiu_window");
    if (overrides.card) {
        if (mode != "injection") {
            throw Error(Errc::InvalidConfig, "a scorecard override needs mode = injection");
        }
        card = std::pair{*overrides.card, std::size_t{0}};
    }
    if (mode == "injection") {
        InjectionConfig inj;
        if (how) {
            if (how->first == "diu") {
                inj.how = InjectionMethod::Diu;
            } else if (how->first == "aiu") {
                inj.how = InjectionMethod::Aiu;
            } else {
                throw Error(Errc::InvalidConfig, "how must be diu or aiu", how->second);
            }
        }
        if (where) {
            if (where->first == "product") {
                inj.where = InjectionSite::Product;
            } else if (where->first == "deep") {
                inj.where = InjectionSite::Deep;
            } else {
                throw Error(Errc::InvalidConfig, "where must be product or deep", where->second);
            }
        }
        cfg.card_source = card ? card->first : "b";
        inj.card = resolve_scorecard(cfg.card_source, overrides.card ? std::filesystem::path{} : base_dir);
        if (window) {
            const auto w = detail::config_number<std::size_t>("aiu_window", window->first, window->second);
            if (w > 0) {
                inj.window = w;
            }
        }
        cfg.injection = std::move(inj);
    } else if (mode != "baseline") {
        throw Error(Errc::InvalidConfig, "mode must be baseline or injection");
    }

    if (!entries.empty()) {
        const auto& [key, where_line] = *entries.begin();
        throw Error(Errc::InvalidConfig, "line " + std::to_string(where_line.second) + ": unknown key '" + key + "'",
                    where_line.second);
    }
    validate_experiment_config(cfg);
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                               const ConfigOverrides& overrides = {})
{
    return parse_experiment_config(read_file(path), path.parent_path(), overrides);
}

/// Ordered key/value echo of a configuration, written into every report.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg)
{
    using text::format_real;
    std::vector<std::pair<std::string, std::string>> out = {
        {"name", cfg.name},
        {"seed", std::to_string(cfg.dataset.seed)},
        {"model_seed", std::to_string(cfg.model_seed)},
        {"shuffle_seed", std::to_string(cfg.shuffle_seed)},
        {"num_classes", std::to_string(cfg.dataset.num_classes)},
        {"train", std::to_string(cfg.dataset.train)},
        {"validation", std::to_string(cfg.dataset.validation)},
        {"test", std::to_string(cfg.dataset.test)},
        {"feature_dim", std::to_string(cfg.dataset.feature_dim)},
        {"class_separation", format_real(cfg.dataset.class_separation)},
        {"box_noise", format_real(cfg.dataset.box_noise)},
        {"epochs", std::to_string(cfg.epochs)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"learning_rate", format_real(cfg.learning_rate)},
        {"init_scale", format_real(cfg.init_scale)},
        {"iou_threshold", format_real(cfg.iou_threshold)},
        {"mode", cfg.injection ? "injection" : "baseline"},
    };
    if (cfg.injection) {
        out.emplace_back("how", std::string(to_string(cfg.injection->how)));
        out.emplace_back("where", std::string(to_string(cfg.injection->where)));
        out.emplace_back("card", cfg.card_source.empty() ? cfg.injection->card.name() : cfg.card_source);
        out.emplace_back("card_name", cfg.injection->card.name());
        if (cfg.injection->window) {
            out.emplace_back("aiu_window", std::to_string(*cfg.injection->window));
        }
    }
    return out;
}

} // namespace evidential

#endif // EVIDENTIAL_CONFIG_HPP
