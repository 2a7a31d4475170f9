// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include "chanpred/arkalman.hpp"
#include "chanpred/chanmodel.hpp"
#include "chanpred/dataset.hpp"
#include "chanpred/error.hpp"
#include "chanpred/evalsuite.hpp"
#include "chanpred/nn/checkpoint.hpp"
#include "chanpred/nn/train.hpp"
#include "check.hpp"
#include "config.hpp"
#include "evaluation.hpp"
#include "manifest.hpp"

namespace chanpred::cli {
namespace fs = std::filesystem;
namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t threads = 1;
    bool check = false;
};

struct Options {
    CommonOptions common;
    std::string data;
    std::vector<std::string> checkpoints;
    bool kf = false;
    std::string report_dir = ".";
    std::size_t steps = 4;
    std::optional<std::size_t> epochs;
    bool oracle = false;
    std::vector<std::string> files;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

ExperimentConfig resolve_config(const CommonOptions &o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    c.kf.threads = o.threads;
    validate(c);
    return c;
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

void replay_checks(const std::vector<fs::path> &files, std::ostream &out) {
    for (const auto &f : files) {
        const auto kind = check_file(f);
        out << "check " << f.string() << ": ok (" << kind << ")\n";
    }
}

fs::path require_out(const CommonOptions &o, const char *what) {
    if (o.out.empty()) throw ArgumentError(std::string("--out is required (") + what + ")");
    return o.out;
}

json load_manifest_for(const fs::path &artifact) {
    const auto path = manifest_path(artifact);
    if (!fs::exists(path)) throw DataError(artifact.string() + ": missing manifest " + path.string());
    return read_json(path);
}

struct LoadedData {
    data::Dataset dataset;
    json manifest;
};

LoadedData load_dataset(const std::string &path) {
    if (path.empty()) throw ArgumentError("--data is required");
    LoadedData d{data::read_dataset(path), load_manifest_for(path)};
    if (d.manifest.value("hash", "") != file_hash(path))
        throw DataError(path + ": content hash does not match its manifest");
    attach_metadata(d.dataset, d.manifest);
    return d;
}

void require_memory(const ExperimentConfig &c, const data::Dataset &ds) {
    if (ds.m != c.m)
        throw DataError("dataset.m = " + std::to_string(c.m) + " but the data was built with m = " +
                        std::to_string(ds.m));
}

json dataset_manifest(const fs::path &file, const data::Dataset &ds, std::size_t ports, const std::string &source,
                      std::vector<std::string> lineage, const ExperimentConfig &c) {
    json j;
    j["format"] = "chanpred-dataset";
    j["version"] = kManifestVersion;
    j["file"] = file.filename().string();
    j["hash"] = file_hash(file);
    j["source"] = source;
    j["sample_count"] = ds.samples.size();
    j["m"] = ds.m;
    j["rows"] = ds.rows;
    j["cols"] = ds.cols;
    j["ports"] = ports;
    std::vector<std::uint64_t> drop_ids;
    for (const auto &s : ds.samples)
        if (drop_ids.empty() || drop_ids.back() != s.meta.drop_id) drop_ids.push_back(s.meta.drop_id);
    j["drops"] = drop_ids.size();
    j["layout"] = kDatasetLayout;
    j["drop_ids"] = drop_ids;
    j["lineage"] = lineage;
    j["seed"] = c.seed;
    j["config"] = format_config(c);
    return j;
}

// ---- generate ----

int cmd_generate(const Options &o, std::ostream &out) {
    const auto c = resolve_config(o.common);
    const fs::path path = require_out(o.common, "dataset file");
    const auto drops = chan::sample_drops(c.drops, c.seed, c.drop_count, o.common.threads);
    data::Dataset ds;
    ds.m = static_cast<std::uint32_t>(c.m);
    ds.rows = static_cast<std::uint32_t>(c.drops.grid.num_symbols);
    ds.cols = static_cast<std::uint32_t>(c.drops.grid.num_subcarriers);
    std::vector<std::string> lineage;
    for (const auto &d : drops) {
        const auto slots = chan::generate_slots(d, 0, c.slots_per_drop);
        auto samples = data::build_samples(slots, c.m, d.rng_seed, 0);
        ds.samples.insert(ds.samples.end(), std::make_move_iterator(samples.begin()),
                          std::make_move_iterator(samples.end()));
        lineage.push_back("drop:" + std::to_string(d.rng_seed));
    }
    data::write_dataset(ds, path);

    json j = dataset_manifest(path, ds, c.drops.grid.num_tx_ports, "synthetic", lineage, c);
    j["slots_per_drop"] = c.slots_per_drop;
    j["speed_kmh"] = c.drops.speed * 3.6;
    j["carrier_ghz"] = c.drops.grid.carrier_frequency / 1e9;
    j["slot_period_ms"] = c.drops.grid.slot_period * 1e3;
    if (c.drops.speed > 0)
        j["coherence_time_ms"] = chan::coherence_time(c.drops.speed, c.drops.grid.carrier_frequency) * 1e3;
    else
        j["coherence_time_ms"] = nullptr;
    write_json(manifest_path(path), j);

    out << "wrote " << path.string() << ": " << ds.samples.size() << " samples from " << c.drop_count
        << " drops x " << c.slots_per_drop << " slots (m=" << c.m << ", T=" << ds.rows << ", F=" << ds.cols
        << ", ports=" << c.drops.grid.num_tx_ports << ")\n";
    if (!j["coherence_time_ms"].is_null())
        out << "coherence_time_ms=" << short_fmt(j["coherence_time_ms"].get<double>()) << "\n";
    if (o.common.check) replay_checks({path, manifest_path(path)}, out);
    return kExitOk;
}

// ---- train ----

double persistence_l1(std::span<const data::Sample> samples) {
    if (samples.empty()) return std::nan("");
    double sum = 0.0;
    for (const auto &s : samples) sum += eval::mae_report(s.state(s.m - 1), s.target());
    return sum / static_cast<double>(samples.size());
}

int cmd_train(const Options &o, std::ostream &out, std::ostream &err) {
    auto c = resolve_config(o.common);
    if (o.epochs) c.train.epochs = *o.epochs;
    const fs::path path = require_out(o.common, "checkpoint file");
    const auto loaded = load_dataset(o.data);
    const auto &ds = loaded.dataset;
    const json &data_manifest = loaded.manifest;
    require_memory(c, ds);
    const auto spec = c.model_spec(ds.rows, ds.cols);
    spec.validate();

    // Validation takes the last drops in file order, so no window straddles the split.
    std::vector<std::uint64_t> order;
    std::set<std::uint64_t> seen;
    for (const auto &s : ds.samples)
        if (seen.insert(s.meta.drop_id).second) order.push_back(s.meta.drop_id);
    std::size_t n_val = 0;
    if (c.val_fraction > 0 && order.size() > 1)
        n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(c.val_fraction * order.size())), 1,
                                        order.size() - 1);
    const std::set<std::uint64_t> val_drops(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::vector<data::Sample> train_set, val_set;
    for (const auto &s : ds.samples) (val_drops.contains(s.meta.drop_id) ? val_set : train_set).push_back(s);

    nn::Model<float> model(spec, c.seed);
    nn::Adam<float> opt(nn::AdamConfig{c.train.learning_rate});
    nn::TrainConfig tc;
    tc.epochs = c.train.epochs;
    tc.batch_size = c.train.batch_size;
    tc.seed = c.seed;
    tc.threads = o.common.threads;
    tc.on_epoch = [&](const nn::EpochRecord &r) {
        err << "epoch " << r.epoch << "/" << tc.epochs << " train_l1=" << short_fmt(r.train_l1)
            << " val_l1=" << short_fmt(r.val_l1) << "\n";
    };
    out << "training " << nn::to_string(spec.variant) << "/" << nn::to_string(spec.arch) << " depth "
        << spec.depth << ": " << model.parameter_count() << " parameters (budget " << model.plan().parameter_budget
        << "), " << train_set.size() << " train / " << val_set.size() << " validation samples\n";
    nn::TrainingReport report;
    if (tc.epochs > 0) report = nn::train(model, opt, train_set, val_set, tc);

    nn::save_checkpoint(nn::make_checkpoint(model, opt), path);
    const fs::path log = path.string() + ".train.csv";
    report.write_csv(log);

    const double aged = persistence_l1(val_set);
    const double final_train = report.epochs.empty() ? std::nan("") : report.epochs.back().train_l1;
    const double final_val = report.epochs.empty() ? nn::evaluate_l1(model, val_set) : report.epochs.back().val_l1;

    json j;
    j["format"] = "chanpred-checkpoint";
    j["version"] = kManifestVersion;
    j["file"] = path.filename().string();
    j["hash"] = file_hash(path);
    j["dataset_file"] = fs::path(o.data).filename().string();
    j["dataset_hash"] = data_manifest["hash"];
    j["lineage"] = lineage_of(data_manifest);
    j["seed"] = c.seed;
    j["epochs"] = c.train.epochs;
    j["model"] = {{"variant", nn::to_string(spec.variant)},
                  {"arch", nn::to_string(spec.arch)},
                  {"depth", spec.depth},
                  {"base_channels", spec.base_channels},
                  {"m", spec.m},
                  {"rows", spec.rows},
                  {"cols", spec.cols},
                  {"parameter_count", model.parameter_count()},
                  {"parameter_budget", model.plan().parameter_budget},
                  {"decoder_scale", model.plan().decoder_scale}};
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"learning_rate", c.train.learning_rate},
                  {"train_samples", train_set.size()},
                  {"val_samples", val_set.size()},
                  {"final_train_l1", num_or_null(final_train)},
                  {"final_val_l1", num_or_null(final_val)},
                  {"aged_val_l1", num_or_null(aged)}};
    write_json(manifest_path(path), j);

    out << "final_train_l1=" << short_fmt(final_train) << "\n"
        << "final_val_l1=" << short_fmt(final_val) << "\n"
        << "aged_val_l1=" << short_fmt(aged) << "\n"
        << "wrote " << path.string() << "\n";
    if (o.common.check) replay_checks({path, manifest_path(path), log}, out);
    return kExitOk;
}

// ---- evaluate / rollout / kf-baseline ----

struct LoadedModel {
    std::string name;
    nn::Model<float> model;
};

LoadedModel load_model(const std::string &path, const json &data_manifest, std::size_t threads) {
    const json manifest = load_manifest_for(path);
    check_lineage(manifest, data_manifest);
    auto model = nn::restore_model(nn::load_checkpoint(path));
    model.set_threads(threads);
    return {fs::path(path).stem().string(), std::move(model)};
}

int cmd_evaluate(const Options &o, std::ostream &out) {
    const auto c = resolve_config(o.common);
    const auto loaded = load_dataset(o.data);
    const auto &ds = loaded.dataset;
    const json &data_manifest = loaded.manifest;
    require_memory(c, ds);
    std::vector<LoadedModel> models;
    for (const auto &p : o.checkpoints) models.push_back(load_model(p, data_manifest, o.common.threads));

    const auto plan = plan_evaluation(ds, c.kf.window, c.eval.horizon);
    const fs::path dir = o.report_dir;
    fs::create_directories(dir);

    std::string mae = "predictor,l1,n_windows,n_samples\n";
    auto row = [&](const std::string &name, double v) {
        mae += name + "," + fmt(v) + "," + std::to_string(plan.windows.size()) + "," +
               std::to_string(plan.sample_count()) + "\n";
    };
    json summary;
    summary["format"] = "chanpred-evaluation";
    summary["version"] = kManifestVersion;
    summary["dataset_hash"] = data_manifest.value("hash", "");
    summary["windows"] = plan.windows.size();
    summary["samples"] = plan.sample_count();

    const double aged = aged_l1(plan);
    row("aged", aged);
    summary["mae"]["aged"] = aged;
    out << "windows=" << plan.windows.size() << " samples=" << plan.sample_count() << "\n";
    out << "aged l1=" << short_fmt(aged) << "\n";

    std::vector<chan::SlotGrids> kf;
    if (o.kf) {
        std::size_t fallbacks = 0;
        kf = kf_predictions(plan, c.kf, &fallbacks);
        const double v = kf_l1(plan, kf);
        row("kf", v);
        summary["mae"]["kf"] = v;
        summary["kf_fallback_pixels"] = fallbacks;
        out << "kf l1=" << short_fmt(v) << " (persistence fallbacks: " << fallbacks << " pixels)\n";
    }
    std::vector<float> first_dl;
    for (auto &m : models) {
        auto pred = model_predictions(plan, m.model, 1);
        const double v = predictions_l1(plan, pred[0], 1);
        row(m.name, v);
        summary["mae"]["models"][m.name] = v;
        out << m.name << " l1=" << short_fmt(v) << "\n";
        if (first_dl.empty()) first_dl = std::move(pred[0]);
    }

    const auto report = capacity_comparison(plan, kf, first_dl, c.eval.rho_db, c.eval.epsilon);
    summary["capacity"] = json::parse(report.to_json());
    if (!models.empty()) summary["capacity_model"] = models.front().name;

    const std::vector<fs::path> files{dir / "mae_comparison.csv", dir / "capacity_report.csv",
                                      dir / "capacity_report.json", dir / "capacity_cdf.csv", dir / "evaluation.json"};
    write_text(files[0], mae);
    write_text(files[1], report.to_csv());
    write_text(files[2], report.to_json());
    write_text(files[3], report.cdf_csv());
    write_json(files[4], summary);

    for (const auto &m : report.modes) {
        out << "C_eps[" << eval::to_string(m.mode) << "]=" << short_fmt(m.c_eps) << " bit/s/Hz";
        if (m.mode != eval::CsiMode::perfect) out << " loss=" << short_fmt(report.loss_pct(m.mode)) << "%";
        if (m.mode != eval::CsiMode::perfect && m.mode != eval::CsiMode::aged)
            out << " reduction=" << short_fmt(report.reduction_pct(m.mode)) << "%";
        out << "\n";
    }
    out << "wrote reports to " << dir.string() << "\n";
    if (o.common.check) replay_checks(files, out);
    return kExitOk;
}

int cmd_rollout(const Options &o, std::ostream &out) {
    const auto c = resolve_config(o.common);
    if (o.steps < 1) throw ArgumentError("--steps must be >= 1");
    if (o.steps > c.eval.horizon)
        throw ConfigError("eval.horizon: --steps " + std::to_string(o.steps) + " exceeds the evaluation horizon " +
                          std::to_string(c.eval.horizon));
    const auto loaded = load_dataset(o.data);
    const auto &ds = loaded.dataset;
    const json &data_manifest = loaded.manifest;
    require_memory(c, ds);
    if (o.oracle == !o.checkpoints.empty())
        throw ArgumentError("rollout needs exactly one of --checkpoint or --oracle");
    if (o.checkpoints.size() > 1) throw ArgumentError("rollout takes a single --checkpoint");

    const auto plan = plan_evaluation(ds, c.kf.window, c.eval.horizon);
    StepPredictions pred;
    if (o.oracle) {
        pred = oracle_predictions(plan, o.steps);
    } else {
        auto m = load_model(o.checkpoints.front(), data_manifest, o.common.threads);
        pred = model_predictions(plan, m.model, o.steps);
    }
    const auto l1 = rollout_l1(plan, pred);
    std::string csv = "step,mean_l1,n_samples\n";
    for (std::size_t s = 0; s < l1.size(); ++s) {
        csv += std::to_string(s + 1) + "," + fmt(l1[s]) + "," + std::to_string(plan.sample_count()) + "\n";
        out << "step " << s + 1 << " l1=" << short_fmt(l1[s]) << "\n";
    }
    const fs::path path = o.common.out.empty() ? fs::path(o.report_dir) / "rollout.csv" : fs::path(o.common.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_text(path, csv);
    out << "wrote " << path.string() << "\n";
    if (o.common.check) replay_checks({path}, out);
    return kExitOk;
}

int cmd_kf_baseline(const Options &o, std::ostream &out) {
    const auto c = resolve_config(o.common);
    const auto loaded = load_dataset(o.data);
    const auto &ds = loaded.dataset;
    require_memory(c, ds);
    const auto plan = plan_evaluation(ds, c.kf.window, c.eval.horizon);
    std::size_t fallbacks = 0;
    const auto kf = kf_predictions(plan, c.kf, &fallbacks);
    const auto rows = per_window_l1(plan, kf);
    std::string csv = "drop_id,target_slot,aged_l1,kf_l1\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto &w = plan.windows[k];
        const auto &seq = plan.sequences[w.sequence];
        csv += std::to_string(seq.drop_id) + "," +
               std::to_string(seq.first_slot + static_cast<std::int64_t>(w.target)) + "," + fmt(rows[k].first) +
               "," + fmt(rows[k].second) + "\n";
    }
    const fs::path path =
        o.common.out.empty() ? fs::path(o.report_dir) / "kf_baseline.csv" : fs::path(o.common.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_text(path, csv);
    out << "windows=" << plan.windows.size() << "\n"
        << "aged l1=" << short_fmt(aged_l1(plan)) << "\n"
        << "kf l1=" << short_fmt(kf_l1(plan, kf)) << " (persistence fallbacks: " << fallbacks << " pixels)\n"
        << "wrote " << path.string() << "\n";
    if (o.common.check) replay_checks({path}, out);
    return kExitOk;
}

// ---- traces ----

int cmd_trace_emulate(const Options &o, std::ostream &out) {
    const auto c = resolve_config(o.common);
    const fs::path path = require_out(o.common, "trace CSV");
    const auto drop = chan::sample_drop(c.drops, c.seed);
    const double snr = c.trace.snr_db;
    const auto trace = data::emulate_srs_trace(drop, c.trace.snapshots, c.trace.period, c.trace.stride, snr,
                                               c.seed ^ 0x5e5e5e5e5e5e5e5eULL);
    data::export_trace_csv(trace, path);
    json j;
    j["format"] = "chanpred-trace";
    j["version"] = kManifestVersion;
    j["file"] = path.filename().string();
    j["hash"] = file_hash(path);
    j["lineage"] = {"drop:" + std::to_string(drop.rng_seed)};
    j["snapshots"] = c.trace.snapshots;
    j["period_ms"] = c.trace.period * 1e3;
    j["stride"] = c.trace.stride;
    j["snr_db"] = snr;
    j["ports"] = trace.num_ports();
    j["subcarriers"] = trace.num_subcarriers();
    write_json(manifest_path(path), j);
    out << "wrote " << path.string() << ": " << c.trace.snapshots << " snapshots x " << trace.num_ports()
        << " ports x " << trace.num_subcarriers() << " subcarriers\n";
    if (o.common.check) replay_checks({path}, out);
    return kExitOk;
}

int cmd_trace_ingest(const Options &o, std::ostream &out) {
    const auto c = resolve_config(o.common);
    if (o.data.empty()) throw ArgumentError("--data is required (trace CSV)");
    const fs::path path = require_out(o.common, "dataset file");
    const auto trace = data::ingest_trace_csv(o.data, c.trace.period, c.trace.stride, c.trace.snr_db);
    data::Dataset ds;
    ds.m = static_cast<std::uint32_t>(c.m);
    ds.rows = 1;
    ds.cols = static_cast<std::uint32_t>(trace.num_subcarriers());
    ds.samples = data::build_samples(trace.snapshots, c.m, 0, 0);
    data::write_dataset(ds, path);

    std::vector<std::string> lineage{"trace:" + file_hash(o.data)};
    const auto trace_manifest = manifest_path(o.data);
    if (fs::exists(trace_manifest))
        for (auto &u : lineage_of(read_json(trace_manifest))) lineage.push_back(u);
    json j = dataset_manifest(path, ds, trace.num_ports(), "trace", lineage, c);
    j["snapshots"] = trace.snapshots.size();
    j["period_ms"] = c.trace.period * 1e3;
    write_json(manifest_path(path), j);
    out << "wrote " << path.string() << ": " << ds.samples.size() << " samples from " << trace.snapshots.size()
        << " snapshots (T=1, F=" << ds.cols << ")\n";
    if (o.common.check) replay_checks({path, manifest_path(path)}, out);
    return kExitOk;
}

int cmd_check(const Options &o, std::ostream &out) {
    if (o.files.empty()) throw ArgumentError("check needs at least one file");
    std::vector<fs::path> files(o.files.begin(), o.files.end());
    replay_checks(files, out);
    return kExitOk;
}

int exit_code_for(const Error &e) {
    switch (e.kind()) {
    case ErrorKind::config:
    case ErrorKind::argument: return kExitUsage;
    case ErrorKind::index:
    case ErrorKind::data:
    case ErrorKind::format:
    case ErrorKind::shape: return kExitData;
    case ErrorKind::numeric:
    case ErrorKind::degenerate: return kExitNumeric;
    }
    return kExitData;
}

void add_common(CLI::App *cmd, CommonOptions &c, bool with_out = true) {
    cmd->add_option("--config", c.config, "Experiment config file (sectioned key = value)");
    cmd->add_option("--seed", c.seed, "Overrides the config seed");
    if (with_out) cmd->add_option("--out", c.out, "Output file");
    cmd->add_option("--threads", c.threads, "Worker threads for GEMM, drop sampling and the KF grid")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--check", c.check, "Re-read and schema-validate every emitted file");
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"chanpred: wireless channel prediction workbench"};
    app.name("chanpred");
    app.require_subcommand(1);
    Options o;

    auto *gen = app.add_subcommand("generate", "Synthesize a dataset of drops and its manifest");
    add_common(gen, o.common);

    auto *train = app.add_subcommand("train", "Train a model on a dataset; writes a checkpoint");
    add_common(train, o.common);
    train->add_option("--data", o.data, "Dataset file")->required();
    train->add_option("--epochs", o.epochs, "Overrides model.epochs");

    auto *evaluate = app.add_subcommand("evaluate", "Compare aged, KF and model predictions");
    add_common(evaluate, o.common, false);
    evaluate->add_option("--data", o.data, "Evaluation dataset file")->required();
    evaluate->add_option("--checkpoint", o.checkpoints, "Model checkpoint (repeatable)");
    evaluate->add_flag("--kf", o.kf, "Include the AR/Kalman baseline");
    evaluate->add_option("--report-dir", o.report_dir, "Directory for report files");

    auto *roll = app.add_subcommand("rollout", "Multi-step autoregressive prediction error");
    add_common(roll, o.common);
    roll->add_option("--data", o.data, "Evaluation dataset file")->required();
    roll->add_option("--checkpoint", o.checkpoints, "Model checkpoint");
    roll->add_option("--steps", o.steps, "Rollout length");
    roll->add_option("--report-dir", o.report_dir, "Directory for rollout.csv when --out is absent");
    roll->add_flag("--oracle", o.oracle, "Debug: predict the ground truth instead of using a checkpoint");

    auto *kfb = app.add_subcommand("kf-baseline", "Run the AR/Kalman predictor alone");
    add_common(kfb, o.common);
    kfb->add_option("--data", o.data, "Evaluation dataset file")->required();
    kfb->add_option("--report-dir", o.report_dir, "Directory for kf_baseline.csv when --out is absent");

    auto *temu = app.add_subcommand("trace-emulate", "Synthesize an SRS sounding trace CSV");
    add_common(temu, o.common);

    auto *ting = app.add_subcommand("trace-ingest", "Turn an SRS trace CSV into a dataset");
    add_common(ting, o.common);
    ting->add_option("--data", o.data, "Trace CSV")->required();

    auto *chk = app.add_subcommand("check", "Schema-validate previously emitted files");
    chk->add_option("files", o.files, "Files to validate")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(o, out);
        if (train->parsed()) return cmd_train(o, out, err);
        if (evaluate->parsed()) return cmd_evaluate(o, out);
        if (roll->parsed()) return cmd_rollout(o, out);
        if (kfb->parsed()) return cmd_kf_baseline(o, out);
        if (temu->parsed()) return cmd_trace_emulate(o, out);
        if (ting->parsed()) return cmd_trace_ingest(o, out);
        if (chk->parsed()) return cmd_check(o, out);
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

} // namespace chanpred::cli
