// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#include "chanpred/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "chanpred/error.hpp"

namespace chanpred::eval {

const char *to_string(CsiMode mode) {
    switch (mode) {
    case CsiMode::perfect: return "perfect";
    case CsiMode::aged: return "aged";
    case CsiMode::predicted_dl: return "predicted_dl";
    case CsiMode::predicted_kf: return "predicted_kf";
    }
    return "?";
}

double mae_report(std::span<const float> pred, std::span<const float> truth) {
    if (pred.size() != truth.size())
        throw ShapeError("mae_report: " + std::to_string(pred.size()) + " predicted values vs " +
                         std::to_string(truth.size()) + " true values");
    if (pred.empty()) throw ShapeError("mae_report: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        sum += std::abs(static_cast<double>(pred[i]) - static_cast<double>(truth[i]));
    return sum / static_cast<double>(pred.size());
}

std::vector<cplx> assemble_csi_vector(std::span<const PortImages> ports, std::size_t cols, std::size_t t,
                                      std::size_t f) {
    if (ports.empty()) throw DataError("assemble_csi_vector: no ports");
    if (f >= cols) throw IndexError("assemble_csi_vector: subcarrier " + std::to_string(f) + " out of range");
    const std::size_t at = t * cols + f;
    std::vector<cplx> c(ports.size());
    for (std::size_t p = 0; p < ports.size(); ++p) {
        const auto &img = ports[p];
        if (img.real.empty() || img.imag.empty())
            throw DataError("assemble_csi_vector: port " + std::to_string(p) + " is missing its " +
                            (img.real.empty() ? "real" : "imaginary") + " component");
        if (img.real.size() != img.imag.size() || img.real.size() != ports[0].real.size())
            throw ShapeError("assemble_csi_vector: port " + std::to_string(p) + " image size differs");
        if (at >= img.real.size()) throw IndexError("assemble_csi_vector: element (" + std::to_string(t) + ", " +
                                                    std::to_string(f) + ") out of range");
        c[p] = cplx(static_cast<double>(img.real[at] * img.real_scale),
                    static_cast<double>(img.imag[at] * img.imag_scale));
    }
    return c;
}

std::vector<cplx> mrt_precoder(std::span<const cplx> c) {
    double norm2 = 0.0;
    for (const auto &x : c) norm2 += std::norm(x);
    if (!(norm2 > 0.0)) throw DegenerateError("mrt_precoder: zero channel vector");
    const double inv = 1.0 / std::sqrt(norm2);
    std::vector<cplx> w(c.size());
    for (std::size_t p = 0; p < c.size(); ++p) w[p] = std::conj(c[p]) * inv;
    return w;
}

double instantaneous_capacity(std::span<const cplx> c_true, std::span<const cplx> w, double rho) {
    if (c_true.size() != w.size())
        throw ShapeError("instantaneous_capacity: channel has " + std::to_string(c_true.size()) +
                         " ports, precoder " + std::to_string(w.size()));
    if (!(rho > 0.0)) throw ArgumentError("instantaneous_capacity: rho must be > 0");
    double wn = 0.0;
    cplx g = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p) {
        wn += std::norm(w[p]);
        g += c_true[p] * w[p];
    }
    if (std::abs(wn - 1.0) > 1e-9) throw ArgumentError("instantaneous_capacity: precoder is not unit norm");
    return std::log2(1.0 + rho * std::norm(g));
}

double outage_capacity(std::span<const double> samples, double epsilon) {
    if (samples.empty()) throw ArgumentError("outage_capacity: no samples");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("outage_capacity: epsilon must be in (0, 1)");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    // The 1e-12 guard keeps eps*n that is integral up to rounding from stepping up.
    auto k = static_cast<std::size_t>(std::ceil(epsilon * n * (1.0 - 1e-12)));
    k = std::clamp<std::size_t>(k, 1, s.size());
    return s[k - 1];
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

bool CapacityReport::has(CsiMode mode) const {
    return std::ranges::any_of(modes, [&](const ModeCapacity &m) { return m.mode == mode; });
}

double CapacityReport::capacity(CsiMode mode) const {
    for (const auto &m : modes)
        if (m.mode == mode) return m.c_eps;
    throw ArgumentError(std::string("capacity report has no mode ") + to_string(mode));
}

double CapacityReport::loss_pct(CsiMode mode) const {
    const double perfect = capacity(CsiMode::perfect);
    if (perfect == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * (perfect - capacity(mode)) / perfect;
}

double CapacityReport::reduction_pct(CsiMode mode) const {
    if (!has(CsiMode::aged)) return std::numeric_limits<double>::quiet_NaN();
    const double perfect = capacity(CsiMode::perfect), aged = capacity(CsiMode::aged);
    if (perfect == aged) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * (capacity(mode) - aged) / (perfect - aged);
}

std::string CapacityReport::to_csv() const {
    std::string out = "mode,epsilon,rho_db,c_eps_bits,loss_pct,reduction_pct,n_samples\n";
    char buf[256];
    for (const auto &m : modes) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", to_string(m.mode), epsilon, rho_db,
                      m.c_eps, loss_pct(m.mode), reduction_pct(m.mode), n_samples);
        out += buf;
    }
    return out;
}

std::string CapacityReport::to_json() const {
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["rho_db"] = rho_db;
    j["n_samples"] = n_samples;
    j["modes"] = nlohmann::json::array();
    for (const auto &m : modes)
        j["modes"].push_back({{"mode", to_string(m.mode)},
                              {"c_eps_bits", m.c_eps},
                              {"loss_pct", num(loss_pct(m.mode))},
                              {"reduction_pct", num(reduction_pct(m.mode))}});
    return j.dump(2) + "\n";
}

std::string CapacityReport::cdf_csv() const {
    std::string out = "mode,value,cdf\n";
    char buf[160];
    for (const auto &m : modes) {
        std::vector<double> s = m.samples;
        std::sort(s.begin(), s.end());
        for (std::size_t i = 0; i < s.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", to_string(m.mode), s[i],
                          static_cast<double>(i + 1) / static_cast<double>(s.size()));
            out += buf;
        }
    }
    return out;
}

CapacityReport compare_csi_modes(std::span<const cplx> truth, std::span<const ModeEstimate> estimates,
                                 std::size_t ports, double rho_db, double epsilon) {
    if (ports == 0) throw ArgumentError("compare_csi_modes: ports must be >= 1");
    if (truth.empty() || truth.size() % ports != 0)
        throw ArgumentError("compare_csi_modes: truth holds " + std::to_string(truth.size()) +
                            " values, not a whole number of " + std::to_string(ports) + "-port vectors");
    const std::size_t n = truth.size() / ports;
    const double rho = db_to_linear(rho_db);
    CapacityReport report;
    report.rho_db = rho_db;
    report.epsilon = epsilon;
    report.n_samples = n;

    auto score = [&](CsiMode mode, std::span<const cplx> est) {
        ModeCapacity mc;
        mc.mode = mode;
        mc.samples.resize(n);
        for (std::size_t e = 0; e < n; ++e) {
            const auto c = truth.subspan(e * ports, ports);
            const auto w = mrt_precoder(est.subspan(e * ports, ports));
            mc.samples[e] = instantaneous_capacity(c, w, rho);
        }
        mc.c_eps = outage_capacity(mc.samples, epsilon);
        report.modes.push_back(std::move(mc));
    };

    score(CsiMode::perfect, truth);
    for (const auto &m : estimates) {
        if (m.mode == CsiMode::perfect) continue;
        if (m.vectors.size() != truth.size())
            throw ArgumentError(std::string("compare_csi_modes: mode ") + to_string(m.mode) + " covers " +
                                std::to_string(m.vectors.size() / ports) + " elements, truth " + std::to_string(n));
        score(m.mode, m.vectors);
    }
    return report;
}

} // namespace chanpred::eval
