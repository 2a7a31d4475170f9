// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "evaluation.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

#include "chanpred/error.hpp"

namespace chanpred::cli {
namespace {

constexpr std::size_t kMissing = std::numeric_limits<std::size_t>::max();

std::size_t component_index(data::Component c) { return c == data::Component::real ? 0 : 1; }

// Normalised truth image of one sample `step` slots after its last conditioning state.
std::vector<float> truth_image(const EvalPlan &plan, const EvalWindow &w, std::size_t sample, std::size_t step) {
    const auto &s = plan.dataset->samples[sample];
    if (step == 1) return {s.target().begin(), s.target().end()};
    const auto &grid = plan.sequences[w.sequence].slots[w.target + step - 1][s.meta.port];
    std::vector<float> out(s.image_size());
    const bool real = s.meta.component == data::Component::real;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto v = grid.data()[i];
        out[i] = static_cast<float>(real ? v.real() : v.imag()) / s.scale;
    }
    return out;
}

double mean(double sum, std::size_t n) { return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n; }

} // namespace

EvalPlan plan_evaluation(const data::Dataset &dataset, std::size_t history, std::size_t horizon) {
    if (dataset.samples.empty()) throw DataError("evaluation: dataset has no samples");
    if (horizon < 1) throw ArgumentError("evaluation: horizon must be >= 1");
    const std::size_t m = dataset.m, rows = dataset.rows, cols = dataset.cols, image = rows * cols;

    EvalPlan plan;
    plan.dataset = &dataset;
    std::vector<std::uint64_t> order;
    std::map<std::uint64_t, std::vector<std::size_t>> by_drop;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto &s = dataset.samples[i];
        if (!by_drop.contains(s.meta.drop_id)) order.push_back(s.meta.drop_id);
        by_drop[s.meta.drop_id].push_back(i);
        plan.ports = std::max<std::size_t>(plan.ports, s.meta.port + 1);
    }

    for (std::uint64_t drop : order) {
        const auto &members = by_drop[drop];
        std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = std::numeric_limits<std::int64_t>::min();
        for (std::size_t i : members) {
            lo = std::min(lo, dataset.samples[i].meta.target_slot);
            hi = std::max(hi, dataset.samples[i].meta.target_slot);
        }
        Sequence seq;
        seq.drop_id = drop;
        seq.first_slot = lo - static_cast<std::int64_t>(m);
        const auto count = static_cast<std::size_t>(hi - seq.first_slot + 1);
        seq.slots.assign(count, chan::SlotGrids(plan.ports, chan::ChannelGrid(rows, cols)));
        std::vector<char> covered(count * plan.ports * 2, 0);
        std::vector<std::size_t> index(count * plan.ports * 2, kMissing);

        for (std::size_t i : members) {
            const auto &s = dataset.samples[i];
            const std::size_t target = static_cast<std::size_t>(s.meta.target_slot - seq.first_slot);
            const std::size_t c = component_index(s.meta.component);
            index[(target * plan.ports + s.meta.port) * 2 + c] = i;
            for (std::size_t k = 0; k <= m; ++k) {
                const std::size_t slot = target - m + k;
                auto grid = seq.slots[slot][s.meta.port].data();
                const auto state = s.state(k);
                for (std::size_t p = 0; p < image; ++p) {
                    const double v = state[p] * s.scale;
                    grid[p] = c == 0 ? chan::cplx(v, grid[p].imag()) : chan::cplx(grid[p].real(), v);
                }
                covered[(slot * plan.ports + s.meta.port) * 2 + c] = 1;
            }
        }
        for (std::size_t k = 0; k < covered.size(); ++k)
            if (!covered[k])
                throw DataError("evaluation: drop " + std::to_string(drop) + " lacks slot " +
                                std::to_string(seq.first_slot + static_cast<std::int64_t>(k / (2 * plan.ports))) +
                                " port " + std::to_string(k / 2 % plan.ports) + (k % 2 ? " imag" : " real"));

        const std::size_t seq_index = plan.sequences.size();
        const std::size_t first = std::max(history, m);
        for (std::size_t j = first; j + horizon <= count; ++j) {
            EvalWindow w;
            w.sequence = seq_index;
            w.target = j;
            for (std::size_t k = 0; k < plan.ports * 2; ++k) {
                const std::size_t i = index[j * plan.ports * 2 + k];
                if (i == kMissing)
                    throw DataError("evaluation: drop " + std::to_string(drop) + " has no sample for slot " +
                                    std::to_string(seq.first_slot + static_cast<std::int64_t>(j)));
                w.samples.push_back(i);
            }
            plan.windows.push_back(std::move(w));
        }
        plan.sequences.push_back(std::move(seq));
    }
    if (plan.windows.empty())
        throw DataError("evaluation: no drop has " + std::to_string(std::max(history, m) + horizon) +
                        " slots (history " + std::to_string(history) + " + horizon " + std::to_string(horizon) +
                        ")");
    return plan;
}

StepPredictions model_predictions(const EvalPlan &plan, nn::Model<float> &model, std::size_t steps) {
    const auto &ds = *plan.dataset;
    const auto &spec = model.spec();
    if (spec.m != ds.m || spec.rows != ds.rows || spec.cols != ds.cols)
        throw ShapeError("model expects m=" + std::to_string(spec.m) + ", T=" + std::to_string(spec.rows) +
                         ", F=" + std::to_string(spec.cols) + " but the dataset has m=" + std::to_string(ds.m) +
                         ", T=" + std::to_string(ds.rows) + ", F=" + std::to_string(ds.cols));
    std::vector<float> windows;
    windows.reserve(plan.sample_count() * ds.m * ds.rows * ds.cols);
    for (const auto &w : plan.windows)
        for (std::size_t i : w.samples) {
            const auto c = ds.samples[i].conditioning();
            windows.insert(windows.end(), c.begin(), c.end());
        }
    return nn::rollout_batch(model, windows, plan.sample_count(), steps);
}

StepPredictions oracle_predictions(const EvalPlan &plan, std::size_t steps) {
    StepPredictions out(steps);
    for (std::size_t s = 0; s < steps; ++s)
        for (const auto &w : plan.windows)
            for (std::size_t i : w.samples) {
                const auto t = truth_image(plan, w, i, s + 1);
                out[s].insert(out[s].end(), t.begin(), t.end());
            }
    return out;
}

double predictions_l1(const EvalPlan &plan, std::span<const float> predictions, std::size_t step) {
    const std::size_t image = plan.dataset->rows * plan.dataset->cols;
    if (predictions.size() != plan.sample_count() * image)
        throw ShapeError("predictions: expected " + std::to_string(plan.sample_count()) + " images");
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &w : plan.windows)
        for (std::size_t i : w.samples) {
            const auto truth = truth_image(plan, w, i, step);
            sum += eval::mae_report(predictions.subspan(n * image, image), truth);
            ++n;
        }
    return mean(sum, n);
}

std::vector<double> rollout_l1(const EvalPlan &plan, const StepPredictions &predictions) {
    std::vector<double> out;
    for (std::size_t s = 0; s < predictions.size(); ++s) out.push_back(predictions_l1(plan, predictions[s], s + 1));
    return out;
}

double aged_l1(const EvalPlan &plan) {
    const auto &ds = *plan.dataset;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &w : plan.windows)
        for (std::size_t i : w.samples) {
            const auto &s = ds.samples[i];
            sum += eval::mae_report(s.state(ds.m - 1), s.target());
            ++n;
        }
    return mean(sum, n);
}

std::vector<chan::SlotGrids> kf_predictions(const EvalPlan &plan, const ark::KfConfig &config,
                                            std::size_t *fallbacks) {
    std::vector<chan::SlotGrids> out;
    out.reserve(plan.windows.size());
    std::size_t total = 0;
    for (const auto &w : plan.windows) {
        const auto &slots = plan.sequences[w.sequence].slots;
        const std::span<const chan::SlotGrids> history(slots.data() + (w.target - config.window), config.window);
        auto pred = ark::kf_predict_grid(history, config);
        total += pred.fallbacks;
        out.push_back(std::move(pred.grids));
    }
    if (fallbacks) *fallbacks = total;
    return out;
}

namespace {

std::vector<float> kf_image(const data::Sample &s, const chan::SlotGrids &grids) {
    const auto &g = grids.at(s.meta.port);
    std::vector<float> out(s.image_size());
    const bool real = s.meta.component == data::Component::real;
    for (std::size_t p = 0; p < out.size(); ++p) {
        const auto v = g.data()[p];
        out[p] = static_cast<float>(real ? v.real() : v.imag()) / s.scale;
    }
    return out;
}

} // namespace

double kf_l1(const EvalPlan &plan, const std::vector<chan::SlotGrids> &predictions) {
    if (predictions.size() != plan.windows.size()) throw ShapeError("kf predictions: window count mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < plan.windows.size(); ++k)
        for (std::size_t i : plan.windows[k].samples) {
            const auto &s = plan.dataset->samples[i];
            sum += eval::mae_report(kf_image(s, predictions[k]), s.target());
            ++n;
        }
    return mean(sum, n);
}

std::vector<std::pair<double, double>> per_window_l1(const EvalPlan &plan, const std::vector<chan::SlotGrids> &kf) {
    if (kf.size() != plan.windows.size()) throw ShapeError("kf predictions: window count mismatch");
    const auto &ds = *plan.dataset;
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k < plan.windows.size(); ++k) {
        double aged = 0.0, filt = 0.0;
        for (std::size_t i : plan.windows[k].samples) {
            const auto &s = ds.samples[i];
            aged += eval::mae_report(s.state(ds.m - 1), s.target());
            filt += eval::mae_report(kf_image(s, kf[k]), s.target());
        }
        const auto n = static_cast<double>(plan.windows[k].samples.size());
        out.emplace_back(aged / n, filt / n);
    }
    return out;
}

eval::CapacityReport capacity_comparison(const EvalPlan &plan, const std::vector<chan::SlotGrids> &kf,
                                         std::span<const float> dl, double rho_db, double epsilon) {
    const auto &ds = *plan.dataset;
    const std::size_t rows = ds.rows, cols = ds.cols, image = rows * cols, ports = plan.ports;
    if (!kf.empty() && kf.size() != plan.windows.size()) throw ShapeError("kf predictions: window count mismatch");
    if (!dl.empty() && dl.size() != plan.sample_count() * image)
        throw ShapeError("dl predictions: expected " + std::to_string(plan.sample_count()) + " images");

    std::vector<eval::cplx> truth;
    eval::ModeEstimate aged{eval::CsiMode::aged, {}};
    eval::ModeEstimate kf_est{eval::CsiMode::predicted_kf, {}};
    eval::ModeEstimate dl_est{eval::CsiMode::predicted_dl, {}};
    std::vector<eval::PortImages> truth_img(ports), aged_img(ports), dl_img(ports);
    std::size_t n = 0;
    for (std::size_t k = 0; k < plan.windows.size(); ++k) {
        for (std::size_t i : plan.windows[k].samples) {
            const auto &s = ds.samples[i];
            const bool real = s.meta.component == data::Component::real;
            auto bind = [&](eval::PortImages &img, std::span<const float> pixels) {
                (real ? img.real : img.imag) = pixels;
                (real ? img.real_scale : img.imag_scale) = s.scale;
            };
            bind(truth_img[s.meta.port], s.target());
            bind(aged_img[s.meta.port], s.state(ds.m - 1));
            if (!dl.empty()) bind(dl_img[s.meta.port], dl.subspan(n * image, image));
            ++n;
        }
        for (std::size_t t = 0; t < rows; ++t)
            for (std::size_t f = 0; f < cols; ++f) {
                const auto c = eval::assemble_csi_vector(truth_img, cols, t, f);
                truth.insert(truth.end(), c.begin(), c.end());
                const auto a = eval::assemble_csi_vector(aged_img, cols, t, f);
                aged.vectors.insert(aged.vectors.end(), a.begin(), a.end());
                if (!dl.empty()) {
                    const auto d = eval::assemble_csi_vector(dl_img, cols, t, f);
                    dl_est.vectors.insert(dl_est.vectors.end(), d.begin(), d.end());
                }
                if (!kf.empty())
                    for (std::size_t p = 0; p < ports; ++p) kf_est.vectors.push_back(kf[k][p](t, f));
            }
    }
    std::vector<eval::ModeEstimate> estimates{std::move(aged)};
    if (!kf.empty()) estimates.push_back(std::move(kf_est));
    if (!dl.empty()) estimates.push_back(std::move(dl_est));
    return eval::compare_csi_modes(truth, estimates, ports, rho_db, epsilon);
}

} // namespace chanpred::cli
