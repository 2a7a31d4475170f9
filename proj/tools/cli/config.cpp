// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "config.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <vector>

#include "chanpred/error.hpp"

namespace chanpred::cli {
namespace {

std::uint64_t to_uint(const std::string &key, const std::string &v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

double to_double(const std::string &key, const std::string &v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    return out;
}

bool to_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
    std::function<void(ExperimentConfig &, const std::string &key, const std::string &value)> set;
    std::function<std::string(const ExperimentConfig &)> get;
};

// Unit conversions leave noise in the last digits; 15 significant digits hide it.
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

std::string num(float v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

#define UINT_FIELD(expr)                                                                                    \
    Field {                                                                                                 \
        [](ExperimentConfig &c, const std::string &k, const std::string &v) {                               \
            (expr) = static_cast<std::remove_reference_t<decltype(expr)>>(to_uint(k, v));                   \
        },                                                                                                  \
            [](const ExperimentConfig &c) { return std::to_string(expr); }                                  \
    }
#define REAL_FIELD(expr, scale)                                                                             \
    Field {                                                                                                 \
        [](ExperimentConfig &c, const std::string &k, const std::string &v) {                               \
            (expr) = static_cast<std::remove_reference_t<decltype(expr)>>(to_double(k, v) * (scale));       \
        },                                                                                                  \
            [](const ExperimentConfig &c) { return num(static_cast<std::remove_cvref_t<decltype(expr)>>((expr) / (scale))); }              \
    }

constexpr double kDeg = std::numbers::pi / 180.0;

// Ordered so format_config emits a stable, readable file.
const std::vector<std::pair<std::string, Field>> &schema() {
    static const std::vector<std::pair<std::string, Field>> fields = {
        {"seed", UINT_FIELD(c.seed)},
        {"grid.subcarriers", UINT_FIELD(c.drops.grid.num_subcarriers)},
        {"grid.symbols", UINT_FIELD(c.drops.grid.num_symbols)},
        {"grid.subcarrier_spacing_khz", REAL_FIELD(c.drops.grid.subcarrier_spacing, 1e3)},
        {"grid.slot_duration_ms", REAL_FIELD(c.drops.grid.slot_duration, 1e-3)},
        {"grid.slot_period_ms", REAL_FIELD(c.drops.grid.slot_period, 1e-3)},
        {"grid.carrier_ghz", REAL_FIELD(c.drops.grid.carrier_frequency, 1e9)},
        {"grid.tx_ports", UINT_FIELD(c.drops.grid.num_tx_ports)},
        {"drops.count", UINT_FIELD(c.drop_count)},
        {"drops.slots", UINT_FIELD(c.slots_per_drop)},
        {"drops.min_paths", UINT_FIELD(c.drops.min_paths)},
        {"drops.max_paths", UINT_FIELD(c.drops.max_paths)},
        {"drops.delay_spread_ns", REAL_FIELD(c.drops.delay_spread, 1e-9)},
        {"drops.speed_kmh", REAL_FIELD(c.drops.speed, 1.0 / 3.6)},
        {"drops.k_factor", REAL_FIELD(c.drops.k_factor, 1.0)},
        {"drops.arrival_concentration", REAL_FIELD(c.drops.arrival_concentration, 1.0)},
        {"drops.elevation_spread_deg", REAL_FIELD(c.drops.arrival_elevation_spread, kDeg)},
        {"drops.element_spacing", REAL_FIELD(c.drops.element_spacing_wavelengths, 1.0)},
        {"dataset.m", UINT_FIELD(c.m)},
        {"dataset.val_fraction", REAL_FIELD(c.val_fraction, 1.0)},
        {"model.variant",
         {[](ExperimentConfig &c, const std::string &k, const std::string &v) {
              try {
                  c.model.variant = nn::parse_variant(v);
              } catch (const ConfigError &) {
                  throw ConfigError(k + ": unknown variant '" + v +
                                    "' (expected baseline, image_completion or next_frame)");
              }
          },
          [](const ExperimentConfig &c) { return std::string(nn::to_string(c.model.variant)); }}},
        {"model.arch",
         {[](ExperimentConfig &c, const std::string &k, const std::string &v) {
              try {
                  c.model.arch = nn::parse_arch(v);
              } catch (const ConfigError &) {
                  throw ConfigError(k + ": unknown arch '" + v + "' (expected ae or unet)");
              }
          },
          [](const ExperimentConfig &c) { return std::string(nn::to_string(c.model.arch)); }}},
        {"model.depth", UINT_FIELD(c.model.depth)},
        {"model.base_channels", UINT_FIELD(c.model.base_channels)},
        {"model.parameter_budget", UINT_FIELD(c.model.parameter_budget)},
        {"model.epochs", UINT_FIELD(c.train.epochs)},
        {"model.batch_size", UINT_FIELD(c.train.batch_size)},
        {"model.learning_rate", REAL_FIELD(c.train.learning_rate, 1.0)},
        {"model.dropout", REAL_FIELD(c.model.dropout_rate, 1.0)},
        {"model.leaky_slope", REAL_FIELD(c.model.leaky_slope, 1.0)},
        {"model.bn_epsilon", REAL_FIELD(c.model.bn_epsilon, 1.0)},
        {"model.bn_momentum", REAL_FIELD(c.model.bn_momentum, 1.0)},
        {"kf.order", UINT_FIELD(c.kf.order)},
        {"kf.window", UINT_FIELD(c.kf.window)},
        {"kf.snr_db", REAL_FIELD(c.kf.snr_db, 1.0)},
        {"kf.remove_mean",
         {[](ExperimentConfig &c, const std::string &k, const std::string &v) { c.kf.remove_mean = to_bool(k, v); },
          [](const ExperimentConfig &c) { return std::string(c.kf.remove_mean ? "true" : "false"); }}},
        {"eval.rho_db", REAL_FIELD(c.eval.rho_db, 1.0)},
        {"eval.epsilon", REAL_FIELD(c.eval.epsilon, 1.0)},
        {"eval.horizon", UINT_FIELD(c.eval.horizon)},
        {"trace.snapshots", UINT_FIELD(c.trace.snapshots)},
        {"trace.period_ms", REAL_FIELD(c.trace.period, 1e-3)},
        {"trace.stride", UINT_FIELD(c.trace.stride)},
        {"trace.snr_db", REAL_FIELD(c.trace.snr_db, 1.0)},
    };
    return fields;
}

#undef UINT_FIELD
#undef REAL_FIELD

const Field *find_field(const std::string &key) {
    for (const auto &[name, field] : schema())
        if (name == key) return &field;
    return nullptr;
}

bool known_section(const std::string &section) {
    const std::string prefix = section + ".";
    for (const auto &[name, field] : schema())
        if (name.compare(0, prefix.size(), prefix) == 0) return true;
    return false;
}

} // namespace

nn::ModelSpec ExperimentConfig::model_spec(std::size_t rows, std::size_t cols) const {
    nn::ModelSpec spec = model;
    spec.m = m;
    spec.rows = rows;
    spec.cols = cols;
    return spec;
}

ExperimentConfig parse_config(const std::string &text) {
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::Error &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig config;
    std::map<std::string, bool> seen;
    for (const auto &item : items) {
        if (item.name == "++" || item.name == "--") {
            const std::string section = item.parents.empty() ? "" : item.parents.front();
            if (item.name == "++" && (item.parents.size() != 1 || !known_section(section)))
                throw ConfigError(item.fullname().substr(0, item.fullname().size() - 3) +
                                  ": unknown config section");
            continue;
        }
        const std::string key = item.fullname();
        const Field *field = find_field(key);
        if (field == nullptr) throw ConfigError(key + ": unknown config key");
        if (seen[key]) throw ConfigError(key + ": key given twice");
        seen[key] = true;
        if (item.inputs.size() != 1)
            throw ConfigError(key + ": expected a single value (comments must be on their own line)");
        field->set(config, key, item.inputs.front());
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate(const ExperimentConfig &c) {
    const auto &g = c.drops.grid;
    auto require = [](bool ok, const std::string &key, const std::string &what) {
        if (!ok) throw ConfigError(key + ": " + what);
    };
    require(g.num_subcarriers >= 1, "grid.subcarriers", "must be >= 1");
    require(g.num_symbols >= 1, "grid.symbols", "must be >= 1");
    require(g.subcarrier_spacing > 0, "grid.subcarrier_spacing_khz", "must be > 0");
    require(g.slot_duration > 0, "grid.slot_duration_ms", "must be > 0");
    require(g.slot_period > 0, "grid.slot_period_ms", "must be > 0");
    require(g.carrier_frequency > 0, "grid.carrier_ghz", "must be > 0");
    require(g.num_tx_ports >= 1, "grid.tx_ports", "must be >= 1");
    require(c.drop_count >= 1, "drops.count", "must be >= 1");
    require(c.drops.min_paths >= 1, "drops.min_paths", "must be >= 1");
    require(c.drops.max_paths >= c.drops.min_paths, "drops.max_paths", "must be >= drops.min_paths");
    require(c.drops.delay_spread > 0, "drops.delay_spread_ns", "must be > 0");
    require(c.drops.speed >= 0, "drops.speed_kmh", "must be >= 0");
    require(c.drops.k_factor >= 0, "drops.k_factor", "must be >= 0");
    require(c.drops.arrival_concentration >= 0, "drops.arrival_concentration", "must be >= 0");
    require(c.drops.arrival_elevation_spread >= 0, "drops.elevation_spread_deg", "must be >= 0");
    require(c.drops.element_spacing_wavelengths > 0, "drops.element_spacing", "must be > 0");
    require(c.m >= 1, "dataset.m", "must be >= 1");
    require(c.slots_per_drop >= c.m + 1, "drops.slots", "must be >= dataset.m + 1");
    require(c.val_fraction >= 0 && c.val_fraction < 1, "dataset.val_fraction", "must be in [0, 1)");
    require(c.train.batch_size >= 2, "model.batch_size", "must be >= 2 (batch normalisation)");
    require(c.train.learning_rate > 0, "model.learning_rate", "must be > 0");
    require(c.model.dropout_rate >= 0 && c.model.dropout_rate < 1, "model.dropout", "must be in [0, 1)");
    require(c.model.leaky_slope >= 0, "model.leaky_slope", "must be >= 0");
    require(c.model.bn_epsilon > 0, "model.bn_epsilon", "must be > 0");
    require(c.model.bn_momentum >= 0 && c.model.bn_momentum < 1, "model.bn_momentum", "must be in [0, 1)");
    require(c.model.depth >= 1, "model.depth", "must be >= 1");
    require(c.model.base_channels >= 1, "model.base_channels", "must be >= 1");
    require(c.kf.order >= 1, "kf.order", "must be >= 1");
    require(c.kf.window > c.kf.order, "kf.window", "must exceed kf.order");
    require(c.eval.epsilon > 0 && c.eval.epsilon < 1, "eval.epsilon", "must be in (0, 1)");
    require(c.eval.horizon >= 1, "eval.horizon", "must be >= 1");
    require(c.trace.snapshots >= 1, "trace.snapshots", "must be >= 1");
    require(c.trace.period > 0, "trace.period_ms", "must be > 0");
    require(c.trace.stride >= 1, "trace.stride", "must be >= 1");
    // Depth limits depend on the grid; train re-checks against the dataset it loads.
    c.model_spec(g.num_symbols, g.num_subcarriers).validate();
}

std::string format_config(const ExperimentConfig &config) {
    std::string out;
    std::string section;
    for (const auto &[name, field] : schema()) {
        const auto dot = name.find('.');
        const std::string sec = dot == std::string::npos ? "" : name.substr(0, dot);
        const std::string key = dot == std::string::npos ? name : name.substr(dot + 1);
        if (sec != section) {
            out += "\n[" + sec + "]\n";
            section = sec;
        }
        out += key + " = " + field.get(config) + "\n";
    }
    return out;
}

} // namespace chanpred::cli
