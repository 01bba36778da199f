#ifndef DEPTHSIGN_CONFIG_HPP
#define DEPTHSIGN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "depthsign/data.hpp"
#include "depthsign/errors.hpp"
#include "depthsign/stack.hpp"

namespace depthsign {

/// Everything a training run needs. Built-in defaults follow the full-scale
/// protocol (hidden sizes 100/50, epoch caps 400/100/400, 50/25/25 split);
/// the desk-scale runs override them per invocation.
struct RunConfig {
    std::string manifest;
    std::string out_dir = "run";
    std::uint64_t seed = 1;
    double frac_train = 0.50;
    double frac_val = 0.25;
    double frac_test = 0.25;
    std::string subjects = "all"; // "all" or comma-separated subject ids
    std::size_t parallel_subjects = 1;
    PipelineHyper pipeline{
        AeHyper{100, 400, 0.1, 0.9, 1e-4, 0.05, 1.0, 64},
        AeHyper{50, 100, 0.1, 0.9, 1e-4, 0.05, 1.0, 64},
        SoftmaxHyper{400, 0.1, 0.9, 1e-4, 64},
        FineTuneHyper{},
    };

    std::array<double, 3> fractions() const { return {frac_train, frac_val, frac_test}; }
};

/// Reassert the full-scale protocol values (network 65536 -> 100 -> 50 -> 5
/// once 256x256 data is attached; the input and class dimensions come from
/// the dataset itself).
inline void apply_paper_defaults(RunConfig& cfg) {
    cfg.frac_train = 0.50;
    cfg.frac_val = 0.25;
    cfg.frac_test = 0.25;
    cfg.pipeline.ae1.hidden = 100;
    cfg.pipeline.ae1.epochs_max = 400;
    cfg.pipeline.ae2.hidden = 50;
    cfg.pipeline.ae2.epochs_max = 100;
    cfg.pipeline.head.epochs_max = 400;
}

// -- Key table ------------------------------------------------------------------
//
// Every configuration key is also a CLI flag of the same name and a line in
// the `key = value` config file, so one table drives all three.

struct ConfigKey {
    std::string name;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::logic_error&) {
        throw ParameterError(key + ": expected a non-negative integer, got '" + value + "'");
    }
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::logic_error&) {
        throw ParameterError(key + ": expected a number, got '" + value + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ParameterError(key + ": expected true/false, got '" + value + "'");
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline const std::vector<ConfigKey>& config_keys() {
    auto str_key = [](std::string name, std::string help, std::string RunConfig::* member) {
        return ConfigKey{
            std::move(name), std::move(help),
            [member](RunConfig& c, const std::string& v) { c.*member = v; },
            [member](const RunConfig& c) { return c.*member; }};
    };
    auto u64_key = [](std::string name, std::string help, auto accessor) {
        std::string key = name;
        return ConfigKey{
            std::move(name), std::move(help),
            [accessor, key](RunConfig& c, const std::string& v) {
                accessor(c) = detail::parse_u64(key, v);
            },
            [accessor](const RunConfig& c) {
                return std::to_string(accessor(const_cast<RunConfig&>(c)));
            }};
    };
    auto dbl_key = [](std::string name, std::string help, auto accessor) {
        std::string key = name;
        return ConfigKey{
            std::move(name), std::move(help),
            [accessor, key](RunConfig& c, const std::string& v) {
                accessor(c) = detail::parse_double(key, v);
            },
            [accessor](const RunConfig& c) {
                return detail::format_double(accessor(const_cast<RunConfig&>(c)));
            }};
    };
    auto bool_key = [](std::string name, std::string help, auto accessor) {
        std::string key = name;
        return ConfigKey{
            std::move(name), std::move(help),
            [accessor, key](RunConfig& c, const std::string& v) {
                accessor(c) = detail::parse_bool(key, v);
            },
            [accessor](const RunConfig& c) {
                return accessor(const_cast<RunConfig&>(c)) ? "true" : "false";
            }};
    };

    static const std::vector<ConfigKey> keys = {
        str_key("manifest", "dataset manifest path", &RunConfig::manifest),
        str_key("out_dir", "output directory", &RunConfig::out_dir),
        u64_key("seed", "master random seed",
                [](RunConfig& c) -> std::uint64_t& { return c.seed; }),
        dbl_key("frac_train", "training fraction",
                [](RunConfig& c) -> double& { return c.frac_train; }),
        dbl_key("frac_val", "validation fraction",
                [](RunConfig& c) -> double& { return c.frac_val; }),
        dbl_key("frac_test", "test fraction",
                [](RunConfig& c) -> double& { return c.frac_test; }),
        str_key("subjects", "subject selection: 'all' or comma-separated ids",
                &RunConfig::subjects),
        u64_key("parallel_subjects", "concurrent per-subject trainings",
                [](RunConfig& c) -> std::size_t& { return c.parallel_subjects; }),

        u64_key("ae1_hidden", "first autoencoder hidden units",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.ae1.hidden; }),
        u64_key("ae1_epochs", "first autoencoder epoch cap",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.ae1.epochs_max; }),
        dbl_key("ae1_lr", "first autoencoder learning rate",
                [](RunConfig& c) -> double& { return c.pipeline.ae1.learning_rate; }),
        dbl_key("ae1_momentum", "first autoencoder momentum",
                [](RunConfig& c) -> double& { return c.pipeline.ae1.momentum; }),
        dbl_key("ae1_l2", "first autoencoder weight decay",
                [](RunConfig& c) -> double& { return c.pipeline.ae1.l2_weight; }),
        dbl_key("ae1_rho", "first autoencoder sparsity target",
                [](RunConfig& c) -> double& { return c.pipeline.ae1.sparsity_target; }),
        dbl_key("ae1_beta", "first autoencoder sparsity weight",
                [](RunConfig& c) -> double& { return c.pipeline.ae1.sparsity_weight; }),
        u64_key("ae1_batch", "first autoencoder batch size",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.ae1.batch_size; }),

        u64_key("ae2_hidden", "second autoencoder hidden units",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.ae2.hidden; }),
        u64_key("ae2_epochs", "second autoencoder epoch cap",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.ae2.epochs_max; }),
        dbl_key("ae2_lr", "second autoencoder learning rate",
                [](RunConfig& c) -> double& { return c.pipeline.ae2.learning_rate; }),
        dbl_key("ae2_momentum", "second autoencoder momentum",
                [](RunConfig& c) -> double& { return c.pipeline.ae2.momentum; }),
        dbl_key("ae2_l2", "second autoencoder weight decay",
                [](RunConfig& c) -> double& { return c.pipeline.ae2.l2_weight; }),
        dbl_key("ae2_rho", "second autoencoder sparsity target",
                [](RunConfig& c) -> double& { return c.pipeline.ae2.sparsity_target; }),
        dbl_key("ae2_beta", "second autoencoder sparsity weight",
                [](RunConfig& c) -> double& { return c.pipeline.ae2.sparsity_weight; }),
        u64_key("ae2_batch", "second autoencoder batch size",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.ae2.batch_size; }),

        u64_key("head_epochs", "softmax head epoch cap",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.head.epochs_max; }),
        dbl_key("head_lr", "softmax head learning rate",
                [](RunConfig& c) -> double& { return c.pipeline.head.learning_rate; }),
        dbl_key("head_momentum", "softmax head momentum",
                [](RunConfig& c) -> double& { return c.pipeline.head.momentum; }),
        dbl_key("head_l2", "softmax head weight decay",
                [](RunConfig& c) -> double& { return c.pipeline.head.l2_weight; }),
        u64_key("head_batch", "softmax head batch size",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.head.batch_size; }),

        bool_key("ft_enabled", "enable joint fine-tuning",
                 [](RunConfig& c) -> bool& { return c.pipeline.fine_tune.enabled; }),
        u64_key("ft_epochs", "fine-tune epoch cap",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.fine_tune.epochs_max; }),
        dbl_key("ft_lr", "fine-tune learning rate",
                [](RunConfig& c) -> double& { return c.pipeline.fine_tune.learning_rate; }),
        dbl_key("ft_momentum", "fine-tune momentum",
                [](RunConfig& c) -> double& { return c.pipeline.fine_tune.momentum; }),
        dbl_key("ft_l2", "fine-tune weight decay",
                [](RunConfig& c) -> double& { return c.pipeline.fine_tune.l2_weight; }),
        u64_key("ft_batch", "fine-tune batch size",
                [](RunConfig& c) -> std::size_t& { return c.pipeline.fine_tune.batch_size; }),
    };
    return keys;
}

inline const ConfigKey* find_config_key(const std::string& name) {
    for (const auto& key : config_keys())
        if (key.name == name) return &key;
    return nullptr;
}

/// Parse a flat `key = value` file; '#' starts a comment, blank lines are
/// ignored. Unknown keys are an error.
inline std::map<std::string, std::string> parse_config_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = detail::trim(trimmed.substr(0, eq));
        const std::string value = detail::trim(trimmed.substr(eq + 1));
        if (!find_config_key(key))
            throw ParameterError(path.string() + ":" + std::to_string(line_no) +
                                 ": unknown key '" + key + "'");
        values[key] = value;
    }
    return values;
}

inline void apply_config_values(RunConfig& cfg,
                                const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        const ConfigKey* entry = find_config_key(key);
        if (!entry) throw ParameterError("unknown configuration key '" + key + "'");
        entry->set(cfg, value);
    }
}

/// Render the full configuration as `key = value` lines, table order. This is
/// the snapshot embedded in network bundles.
inline std::string config_snapshot(const RunConfig& cfg) {
    std::string out;
    for (const auto& key : config_keys()) out += key.name + " = " + key.get(cfg) + "\n";
    return out;
}

inline RunConfig config_from_snapshot(const std::string& snapshot) {
    RunConfig cfg;
    std::string line;
    for (std::size_t pos = 0; pos < snapshot.size();) {
        std::size_t end = snapshot.find('\n', pos);
        if (end == std::string::npos) end = snapshot.size();
        line = detail::trim(snapshot.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("config snapshot: expected key = value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (const ConfigKey* entry = find_config_key(key)) entry->set(cfg, value);
        // Unknown snapshot keys are skipped so newer bundles stay readable.
    }
    return cfg;
}

inline void validate_run_config(const RunConfig& cfg) {
    const double sum = cfg.frac_train + cfg.frac_val + cfg.frac_test;
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ParameterError("split fractions sum to " + std::to_string(sum) +
                             ", expected 1");
    if (cfg.frac_train < 0 || cfg.frac_val < 0 || cfg.frac_test < 0)
        throw ParameterError("split fractions must be non-negative");
    if (cfg.parallel_subjects == 0)
        throw ParameterError("parallel_subjects must be at least 1");
}

} // namespace depthsign

#endif // DEPTHSIGN_CONFIG_HPP
