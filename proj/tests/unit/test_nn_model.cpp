// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <vector>

#include "chanpred/chanmodel.hpp"
#include "chanpred/dataset.hpp"
#include "chanpred/error.hpp"
#include "chanpred/nn/checkpoint.hpp"
#include "chanpred/nn/model.hpp"
#include "chanpred/nn/train.hpp"
#include "chanpred/rng.hpp"

using namespace chanpred;
using namespace chanpred::nn;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

constexpr Variant kVariants[] = {Variant::baseline, Variant::image_completion, Variant::next_frame};
constexpr Arch kArchs[] = {Arch::ae, Arch::unet};

std::vector<data::Sample> synthetic_samples(std::size_t rows, std::size_t cols, std::size_t m, std::size_t drops,
                                            std::size_t slots, std::uint64_t seed = 1) {
    chan::DropConfig c;
    c.grid.num_symbols = rows;
    c.grid.num_subcarriers = cols;
    c.grid.num_tx_ports = 1;
    std::vector<data::Sample> out;
    for (std::size_t d = 0; d < drops; ++d) {
        const auto drop = chan::sample_drop(c, seed + d);
        const auto seq = chan::generate_slots(drop, 0, slots);
        auto s = data::build_samples(seq, m, d);
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

template <typename T>
std::vector<T> flat_parameters(Model<T> &model) {
    std::vector<T> out;
    for (auto &p : model.parameters()) out.insert(out.end(), p.value.begin(), p.value.end());
    return out;
}

template <typename T>
Tensor<T> random_tensor(Rng &rng, Shape s) {
    Tensor<T> t(s);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal());
    return t;
}

} // namespace

TEST_CASE("variant and arch names round trip") {
    for (auto v : kVariants) CHECK(parse_variant(to_string(v)) == v);
    for (auto a : kArchs) CHECK(parse_arch(to_string(a)) == a);
    CHECK_THROWS_AS(parse_variant("frames"), ConfigError);
    CHECK_THROWS_AS(parse_arch("resnet"), ConfigError);
}

TEST_CASE("next-frame ae and unet have matching budgets at base 16") {
    ModelSpec spec;
    spec.base_channels = 16;
    spec.arch = Arch::ae;
    const auto ae = plan_model(spec);
    spec.arch = Arch::unet;
    const auto unet = plan_model(spec);
    INFO("ae " << ae.parameter_count << " unet " << unet.parameter_count);
    CHECK(std::abs(static_cast<double>(ae.parameter_count) - unet.parameter_count) < 0.1 * unet.parameter_count);
    CHECK(ae.parameter_budget == unet.parameter_count);
    CHECK(count_parameters(ae.layers) == ae.parameter_count);
}

TEST_CASE("all variants stay within ten percent of the budget") {
    for (std::size_t depth : {2, 4, 6}) {
        for (auto v : kVariants)
            for (auto a : kArchs) {
                ModelSpec spec;
                spec.depth = depth;
                spec.variant = v;
                spec.arch = a;
                const auto plan = plan_model(spec);
                INFO("depth " << depth << " " << to_string(v) << " " << to_string(a) << " count "
                              << plan.parameter_count << " budget " << plan.parameter_budget);
                CHECK(std::abs(static_cast<double>(plan.parameter_count) - plan.parameter_budget) <
                      0.1 * plan.parameter_budget);
            }
    }
}

TEST_CASE("explicit budgets are honoured") {
    ModelSpec spec;
    spec.parameter_budget = 150000;
    spec.arch = Arch::ae;
    const auto plan = plan_model(spec);
    CHECK(plan.parameter_budget == 150000);
    CHECK(std::abs(static_cast<double>(plan.parameter_count) - 150000.0) < 15000.0);
}

TEST_CASE("forward output shapes follow the variant") {
    Rng rng(1);
    for (auto v : kVariants)
        for (auto a : kArchs) {
            ModelSpec spec;
            spec.variant = v;
            spec.arch = a;
            Model<float> model(spec, 3);
            const auto y = model.forward(random_tensor<float>(rng, spec.input_shape(2)), false);
            INFO(to_string(v) << " " << to_string(a));
            CHECK(y.shape() == spec.output_shape(2));
            for (std::size_t i = 0; i < y.size(); ++i) {
                REQUIRE(y[i] > -1.0f);
                REQUIRE(y[i] < 1.0f);
            }
        }
    ModelSpec spec;
    CHECK(spec.input_shape(3) == Shape{3, 4, 8, 64});
    spec.variant = Variant::baseline;
    CHECK(spec.input_shape(3) == Shape{3, 1, 32, 64});
    CHECK(spec.output_shape(3) == Shape{3, 1, 8, 64});
    spec.variant = Variant::image_completion;
    CHECK(spec.input_shape(3) == Shape{3, 1, 40, 64});
    CHECK(spec.output_shape(3) == Shape{3, 1, 40, 64});
}

TEST_CASE("wrong input shape is rejected") {
    ModelSpec spec;
    Model<float> model(spec, 1);
    CHECK_THROWS_AS(model.forward(Tensor<float>({2, 3, 8, 64}), false), ShapeError);
    CHECK_THROWS_AS(model.forward(Tensor<float>({2, 4, 8, 32}), false), ShapeError);
}

TEST_CASE("same seed gives identical parameters") {
    ModelSpec spec;
    Model<float> a(spec, 7), b(spec, 7), c(spec, 8);
    CHECK(flat_parameters(a) == flat_parameters(b));
    CHECK(flat_parameters(a) != flat_parameters(c));
    CHECK(flat_parameters(a).size() == a.parameter_count());
}

TEST_CASE("initial weights are fan-in scaled") {
    ModelSpec spec;
    spec.base_channels = 16;
    Model<double> model(spec, 2);
    for (std::size_t i = 0; i < model.num_layers(); ++i) {
        const auto &l = model.plan().layers[i];
        if (l.kind != LayerKind::conv) continue;
        auto w = model.layer(i).parameters()[0].value;
        if (w.size() < 2000) continue;
        double s2 = 0.0;
        for (double v : w) s2 += v * v;
        const double fan_in = static_cast<double>(l.in_channels * l.geometry.kh * l.geometry.kw);
        CHECK_THAT(s2 / w.size() * fan_in, WithinAbs(1.0, 0.1));
        for (double v : model.layer(i).parameters()[1].value) CHECK(v == 0.0);
    }
}

TEST_CASE("unet skips join matching spatial dims innermost first") {
    for (auto v : kVariants) {
        ModelSpec spec;
        spec.variant = v;
        spec.arch = Arch::unet;
        const auto plan = plan_model(spec);
        std::vector<Shape> shapes;
        Shape s = spec.input_shape(1);
        Model<float> model(spec, 1);
        for (std::size_t i = 0; i < model.num_layers(); ++i) {
            s = model.layer(i).output_shape(s);
            shapes.push_back(s);
        }
        CHECK(shapes.back() == spec.output_shape(1));
        std::ptrdiff_t last_source = std::numeric_limits<std::ptrdiff_t>::max();
        std::size_t skips = 0;
        for (std::size_t i = 0; i < plan.layers.size(); ++i) {
            const auto &l = plan.layers[i];
            if (l.kind != LayerKind::concat_skip) continue;
            ++skips;
            REQUIRE(l.skip_source >= 0);
            REQUIRE(static_cast<std::size_t>(l.skip_source) < i);
            const Shape src = shapes[static_cast<std::size_t>(l.skip_source)];
            const Shape in = shapes[i - 1];
            CHECK(src.h == in.h);
            CHECK(src.w == in.w);
            // Later decoder blocks reach further out into the encoder.
            CHECK(l.skip_source < last_source);
            last_source = l.skip_source;
        }
        INFO(to_string(v));
        CHECK(skips >= 2);
        spec.arch = Arch::ae;
        for (const auto &l : plan_model(spec).layers) CHECK(l.kind != LayerKind::concat_skip);
    }
}

TEST_CASE("depth that does not divide the band is a configuration error") {
    ModelSpec spec;
    spec.depth = 7;
    CHECK_THROWS_WITH(spec.validate(), ContainsSubstring("depth <= 6"));
    CHECK_THROWS_AS(Model<float>(spec, 1), ConfigError);
    spec.depth = 1;
    spec.cols = 15;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("full model gradient matches finite differences") {
    Rng rng(4);
    for (auto v : kVariants)
        for (auto a : kArchs) {
            ModelSpec spec;
            spec.variant = v;
            spec.arch = a;
            spec.depth = 3;
            spec.base_channels = 2;
            spec.m = 2;
            spec.rows = 4;
            spec.cols = 8;
            Model<double> model(spec, 5);
            Tensor<double> x = random_tensor<double>(rng, spec.input_shape(2));
            const auto y0 = model.forward(x, true);
            model.freeze_dropout(true);
            const auto g = random_tensor<double>(rng, y0.shape());
            model.zero_grad();
            const auto dx = model.backward(g);
            REQUIRE(dx.shape() == x.shape());

            auto objective = [&] {
                const auto y = model.forward(x, true);
                double s = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) s += g[i] * y[i];
                return s;
            };
            const double h = 1e-6;
            auto close = [](double an, double nu) {
                return std::abs(an - nu) <= 1e-4 * std::max({1e-2, std::abs(an), std::abs(nu)});
            };
            INFO(to_string(v) << " " << to_string(a));
            std::size_t checked = 0, bad = 0;
            for (std::size_t i = 0; i < x.size(); i += 3) {
                const double keep = x[i];
                x[i] = keep + h;
                const double up = objective();
                x[i] = keep - h;
                const double down = objective();
                x[i] = keep;
                ++checked;
                if (!close(dx[i], (up - down) / (2 * h))) ++bad;
            }
            for (auto &p : model.parameters())
                for (std::size_t i = 0; i < p.value.size(); i += 5) {
                    const double keep = p.value[i];
                    p.value[i] = keep + h;
                    const double up = objective();
                    p.value[i] = keep - h;
                    const double down = objective();
                    p.value[i] = keep;
                    ++checked;
                    if (!close(p.grad[i], (up - down) / (2 * h))) ++bad;
                }
            INFO("checked " << checked << " mismatched " << bad);
            CHECK(bad == 0);
        }
}

TEST_CASE("mae loss values and gradient") {
    Tensor<double> t({1, 1, 2, 3}, std::vector<double>{0.1, -0.2, 0.3, 0.0, 0.5, -1.0});
    CHECK(mae_loss(t, t).loss == 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(mae_loss(t, t).grad[i] == 0.0);
    Tensor<double> p = t;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += 0.5;
    CHECK_THAT(mae_loss(p, t).loss, WithinAbs(0.5, 1e-15));

    Rng rng(6);
    auto pred = random_tensor<double>(rng, {2, 1, 3, 4});
    const auto target = random_tensor<double>(rng, {2, 1, 3, 4});
    const auto r = mae_loss(pred, target);
    const double h = 1e-6;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double sign = pred[i] > target[i] ? 1.0 : -1.0;
        CHECK(r.grad[i] == sign / 24.0);
        const double keep = pred[i];
        pred[i] = keep + h;
        const double up = mae_loss(pred, target).loss;
        pred[i] = keep - h;
        const double down = mae_loss(pred, target).loss;
        pred[i] = keep;
        CHECK_THAT((up - down) / (2 * h), WithinAbs(r.grad[i], 1e-8));
    }
    CHECK_THROWS_AS(mae_loss(pred, Tensor<double>({2, 1, 3, 3})), ShapeError);
}

TEST_CASE("adam first step moves each weight by the learning rate") {
    std::vector<double> w{1.0, -2.0, 0.5}, g{0.3, -4.0, 0.0};
    Adam<double> opt(AdamConfig{0.01f, 0.9f, 0.999f, 1e-8f});
    const ParamRef<double> ref{w, g};
    opt.step(std::span(&ref, 1));
    CHECK_THAT(w[0], WithinAbs(1.0 - 0.01, 1e-6));
    CHECK_THAT(w[1], WithinAbs(-2.0 + 0.01, 1e-6));
    CHECK(w[2] == 0.5);
    CHECK(opt.steps() == 1);
    // Reference recursion for a second step.
    const double b1 = 0.9f, b2 = 0.999f;
    const double m0 = (1 - b1) * 0.3, v0 = (1 - b2) * 0.09;
    g = {0.1, -4.0, 0.0};
    const double m1 = b1 * m0 + (1 - b1) * 0.1, v1 = b2 * v0 + (1 - b2) * 0.01;
    const double mhat = m1 / (1 - b1 * b1), vhat = v1 / (1 - b2 * b2);
    const double expected = w[0] - static_cast<double>(0.01f) * mhat / (std::sqrt(vhat) + 1e-8);
    opt.step(std::span(&ref, 1));
    CHECK_THAT(w[0], WithinAbs(expected, 1e-9));
}

TEST_CASE("training memorises a dataset of identical pairs") {
    const auto pool = synthetic_samples(8, 64, 4, 1, 5);
    const std::vector<data::Sample> same(16, pool.front());
    ModelSpec spec;
    Model<float> model(spec, 11);
    Adam<float> opt(AdamConfig{1e-3f});
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 3;
    const auto report = train(model, opt, same, {}, cfg);
    REQUIRE(report.epochs.size() == 200);
    double best = 1e9;
    for (const auto &e : report.epochs) {
        REQUIRE(std::isfinite(e.train_l1));
        CHECK(std::isnan(e.val_l1));
        best = std::min(best, e.train_l1);
    }
    INFO("final train l1 " << report.epochs.back().train_l1);
    CHECK(best < 1e-2);
    CHECK(evaluate_l1(model, same) < 1e-2);
}

TEST_CASE("training is deterministic and finite on synthetic data") {
    const auto samples = synthetic_samples(8, 64, 4, 3, 8);
    const std::span<const data::Sample> all(samples);
    const auto train_set = all.first(samples.size() - 10), val_set = all.last(10);
    ModelSpec spec;
    spec.base_channels = 4;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 9;
    cfg.batch_size = 8;
    Model<float> a(spec, 2), b(spec, 2);
    Adam<float> oa, ob;
    const auto ra = train(a, oa, train_set, val_set, cfg);
    const auto rb = train(b, ob, train_set, val_set, cfg);
    CHECK(flat_parameters(a) == flat_parameters(b));
    CHECK(ra.to_csv() == rb.to_csv());
    for (const auto &e : ra.epochs) {
        CHECK(std::isfinite(e.train_l1));
        CHECK(std::isfinite(e.val_l1));
    }
    CHECK_THAT(ra.to_csv(), Catch::Matchers::StartsWith("epoch,train_l1,val_l1\n1,"));

    // Thread count does not change the trajectory.
    Model<float> c(spec, 2);
    Adam<float> oc;
    cfg.threads = 3;
    train(c, oc, train_set, val_set, cfg);
    CHECK(flat_parameters(a) == flat_parameters(c));
}

TEST_CASE("training errors") {
    const auto samples = synthetic_samples(8, 64, 4, 1, 6);
    ModelSpec spec;
    spec.base_channels = 4;
    Model<float> model(spec, 1);
    Adam<float> opt;
    TrainConfig cfg;
    cfg.epochs = 2;
    try {
        train(model, opt, {}, {}, cfg);
        FAIL("expected a training error");
    } catch (const TrainingError &e) {
        CHECK(e.epoch() == 0);
    }
    cfg.batch_size = 1;
    CHECK_THROWS_AS(train(model, opt, samples, {}, cfg), ArgumentError);
    cfg.batch_size = 4;
    model.parameters()[0].value[0] = std::numeric_limits<float>::quiet_NaN();
    try {
        train(model, opt, samples, {}, cfg);
        FAIL("expected a training error");
    } catch (const TrainingError &e) {
        CHECK(e.epoch() == 1);
    }
    ModelSpec other = spec;
    other.m = 3;
    Model<float> mismatched(other, 1);
    CHECK_THROWS_AS(train(mismatched, opt, samples, {}, cfg), ShapeError);
}

TEST_CASE("image completion input zeroes the target block") {
    const auto samples = synthetic_samples(2, 8, 3, 1, 5);
    ModelSpec spec;
    spec.variant = Variant::image_completion;
    spec.m = 3;
    spec.rows = 2;
    spec.cols = 8;
    spec.depth = 2;
    const std::size_t idx[] = {1};
    const auto x = input_batch<float>(spec, samples, idx);
    const auto y = target_batch<float>(spec, samples, idx);
    const auto &s = samples[1];
    for (std::size_t i = 0; i < 3 * 16; ++i) CHECK(x[i] == s.pixels[i]);
    for (std::size_t i = 3 * 16; i < 4 * 16; ++i) CHECK(x[i] == 0.0f);
    for (std::size_t i = 0; i < 4 * 16; ++i) CHECK(y[i] == s.pixels[i]);
    const auto block = predicted_block(spec, y, 0);
    for (std::size_t i = 0; i < 16; ++i) CHECK(block[i] == s.target()[i]);

    spec.variant = Variant::next_frame;
    const auto xn = input_batch<float>(spec, samples, idx);
    const auto yn = target_batch<float>(spec, samples, idx);
    for (std::size_t i = 0; i < 3 * 16; ++i) CHECK(xn[i] == s.pixels[i]);
    for (std::size_t i = 0; i < 16; ++i) CHECK(yn[i] == s.target()[i]);
    CHECK_THROWS_AS(predicted_block(spec, y, 0), ShapeError);
}

TEST_CASE("one-step rollout equals predict and rollout feeds predictions back") {
    const auto samples = synthetic_samples(8, 64, 4, 1, 12);
    for (auto v : kVariants) {
        ModelSpec spec;
        spec.variant = v;
        spec.base_channels = 4;
        Model<float> model(spec, 4);
        const std::size_t image = 8 * 64;
        const auto window = samples[0].conditioning();
        const auto p = predict(model, window);
        const auto r1 = rollout(model, window, 1);
        REQUIRE(r1.size() == 1);
        CHECK(r1[0] == p);

        // Reference loop: shift the window and append each prediction.
        std::vector<float> w(window.begin(), window.end());
        const auto r4 = rollout(model, window, 4);
        for (std::size_t s = 0; s < 4; ++s) {
            const auto next = predict(model, w);
            CHECK(r4[s] == next);
            w.erase(w.begin(), w.begin() + image);
            w.insert(w.end(), next.begin(), next.end());
            for (float x : next) {
                REQUIRE(x > -1.0f);
                REQUIRE(x < 1.0f);
            }
        }

        // Batched forms agree with the single-window path.
        std::vector<float> windows;
        for (std::size_t i = 0; i < 3; ++i) windows.insert(windows.end(), samples[i].conditioning().begin(), samples[i].conditioning().end());
        const auto pb = predict_batch(model, windows, 3);
        const auto rb = rollout_batch(model, windows, 3, 2);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto single = rollout(model, samples[i].conditioning(), 2);
            for (std::size_t k = 0; k < image; ++k) {
                CHECK(pb[i * image + k] == single[0][k]);
                CHECK(rb[1][i * image + k] == single[1][k]);
            }
        }
        CHECK_THROWS_AS(rollout(model, window, 0), ArgumentError);
        CHECK_THROWS_AS(predict(model, window.first(image)), ShapeError);
    }
}

TEST_CASE("checkpoint round trip") {
    const auto samples = synthetic_samples(8, 64, 4, 1, 8);
    ModelSpec spec;
    spec.base_channels = 4;
    spec.arch = Arch::ae;
    Model<float> model(spec, 6);
    Adam<float> opt(AdamConfig{5e-4f});
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    train(model, opt, samples, {}, cfg);

    const auto ckpt = make_checkpoint(model, opt);
    const auto bytes = encode_checkpoint(ckpt);
    REQUIRE(decode_checkpoint(bytes) == ckpt);
    CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

    const auto path = std::filesystem::temp_directory_path() / "chanpred_test_ckpt.bin";
    save_checkpoint(ckpt, path);
    const auto loaded = load_checkpoint(path);
    std::filesystem::remove(path);
    CHECK(loaded == ckpt);

    auto restored = restore_model(loaded);
    CHECK(flat_parameters(restored) == flat_parameters(model));
    const auto window = samples[2].conditioning();
    CHECK(predict(restored, window) == predict(model, window));
    auto ropt = restore_optimizer(loaded);
    CHECK(ropt.steps() == opt.steps());

    // Continuing from the checkpoint matches continuing the original.
    train(model, opt, samples, {}, cfg);
    train(restored, ropt, samples, {}, cfg);
    CHECK(flat_parameters(restored) == flat_parameters(model));
}

TEST_CASE("malformed checkpoints") {
    ModelSpec spec;
    spec.base_channels = 2;
    spec.depth = 2;
    Model<float> model(spec, 1);
    Adam<float> opt;
    const auto bytes = encode_checkpoint(make_checkpoint(model, opt));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_WITH(decode_checkpoint(bad), ContainsSubstring("magic"));
    bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_WITH(decode_checkpoint(bad), ContainsSubstring("version"));
    CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(bytes.size() - 3)), FormatError);
    CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(10)), FormatError);
    bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/chanpred.ckpt"), Error);
}
