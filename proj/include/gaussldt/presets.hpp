#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "errors.hpp"

namespace gaussldt::presets {

using config::BathEntry;
using config::CouplingEntry;
using config::ModelConfig;

inline BathEntry thermal(int oscillator, std::string label, double gamma, double temperature) {
    BathEntry b;
    b.oscillator = oscillator;
    b.label = std::move(label);
    b.gamma = gamma;
    b.temperature = temperature;
    return b;
}

// Identical unit-frequency oscillators, nearest-neighbour couplings of one kind,
// thermal baths "1" on the first and "2" on the last oscillator.
inline ModelConfig chain(int n, const std::string& kind, double g, double gamma, double t1, double dt) {
    if (n < 2) throw ConfigError("chain needs at least two oscillators");
    ModelConfig cfg;
    cfg.oscillators.assign(static_cast<std::size_t>(n), OscillatorSpec{});
    for (int i = 0; i + 1 < n; ++i) cfg.couplings.push_back(CouplingEntry{i, i + 1, kind, g});
    cfg.baths.push_back(thermal(0, "1", gamma, t1));
    cfg.baths.push_back(thermal(n - 1, "2", gamma, t1 + dt));
    cfg.counting_bath = "1";
    return cfg;
}

inline ModelConfig rw_chain(int n, double g, double gamma, double t1, double dt = 1.0) {
    return chain(n, "rw", g, gamma, t1, dt);
}

inline ModelConfig opo_chain(int n, double g, double gamma, double t1, double dt = 1.0) {
    return chain(n, "opo", g, gamma, t1, dt);
}

// Pair coupled through (g/2)(x_1 - x_2)^2.
inline ModelConfig xx_pair(double g, double gamma, double t1, double dt = 1.0) {
    return chain(2, "xx_relative", g, gamma, t1, dt);
}

// One oscillator between two thermal baths "1" and "2".
inline ModelConfig single_two_baths(double gamma, double t1, double t2) {
    ModelConfig cfg;
    cfg.oscillators.assign(1, OscillatorSpec{});
    cfg.baths.push_back(thermal(0, "1", gamma, t1));
    cfg.baths.push_back(thermal(0, "2", gamma, t2));
    cfg.counting_bath = "1";
    return cfg;
}

inline std::vector<double> arange(double lo, double hi, double step) {
    std::vector<double> v;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int k = 0; k <= n; ++k) v.push_back(lo + step * k);
    return v;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * k / (n - 1)));
    return v;
}

// One CSV produced by a preset.
struct Series {
    enum class Kind { theta_curve, sweep, kappa_scan };

    std::string name;
    Kind kind = Kind::theta_curve;
    ModelConfig model;
    std::string bath = "1";
    std::string param;
    std::vector<double> values;
};

inline std::string tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::vector<Series> figure(const std::string& name) {
    using K = Series::Kind;
    std::vector<Series> out;
    const double g = 0.1, gamma = 0.1;
    if (name == "fig1") {
        for (double t1 : {0.5, 1.0, 5.0})
            out.push_back({"fig1_T" + tag(t1), K::theta_curve, rw_chain(10, g, gamma, t1), "1", "", {}});
    } else if (name == "fig2") {
        for (const char* b : {"1", "2"})
            out.push_back({std::string("fig2_bath") + b, K::sweep, rw_chain(10, g, gamma, 0.5), b, "T1",
                           arange(0.5, 5.0, 0.25)});
    } else if (name == "fig3") {
        for (const char* b : {"1", "2"})
            out.push_back({std::string("fig3_bath") + b, K::sweep, opo_chain(2, g, gamma, 0.5), b, "T1",
                           arange(0.5, 5.0, 0.25)});
    } else if (name == "fig4") {
        for (double gg : {0.1, 1.0, 10.0, 100.0})
            out.push_back({"fig4_g" + tag(gg), K::theta_curve, xx_pair(gg, gamma, 10.0), "1", "", {}});
    } else if (name == "fig5") {
        for (double gg : {0.1, 1.0, 10.0, 100.0})
            out.push_back({"fig5_g" + tag(gg), K::sweep, xx_pair(gg, gamma, 0.5), "1", "T1", arange(0.5, 10.0, 0.25)});
    } else if (name == "fig6") {
        out.push_back({"fig6_gamma_scan", K::sweep, xx_pair(0.2, gamma, 10.0), "1", "gamma", logspace(1e-3, 1e2, 26)});
        out.push_back({"fig6_kappa1", K::kappa_scan, xx_pair(0.2, gamma, 10.0), "1", "gamma", logspace(1e-3, 1e2, 26)});
        for (double gm : {0.1, 0.5, 1.0, 2.0, 10.0})
            out.push_back({"fig6_gamma" + tag(gm), K::sweep, xx_pair(0.2, gm, 0.5), "1", "T1", arange(0.5, 10.0, 0.25)});
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected fig1 ... fig6)");
    }
    return out;
}

} // namespace gaussldt::presets
