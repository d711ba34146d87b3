#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace gaussldt {

using cplx = std::complex<double>;

// Bounded force d_i(t) acting on one oscillator.
struct DriveSpec {
    enum class Kind { constant, sinusoidal };

    Kind kind = Kind::constant;
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;

    double value(double t) const {
        if (kind == Kind::constant) return amplitude;
        return amplitude * std::sin(frequency * t + phase);
    }
};

struct OscillatorSpec {
    double omega = 1.0;
    std::optional<DriveSpec> drive;
    cplx upsilon{0.0, 0.0};
};

enum class CouplingKind { xx, rw, opo };

inline const char* to_string(CouplingKind k) {
    switch (k) {
    case CouplingKind::xx: return "xx";
    case CouplingKind::rw: return "rw";
    case CouplingKind::opo: return "opo";
    }
    return "?";
}

struct CouplingSpec {
    int i = 0;
    int j = 1;
    CouplingKind kind = CouplingKind::rw;
    double g = 0.0;
};

struct BathSpec {
    int oscillator = 0;
    double gamma_down = 0.0; // emission into the bath
    double gamma_up = 0.0;   // absorption from the bath
    cplx lambda{0.0, 0.0};
    std::string label;
};

struct NetworkSpec {
    std::vector<OscillatorSpec> oscillators;
    std::vector<CouplingSpec> couplings;
    std::vector<BathSpec> baths;

    int size() const { return static_cast<int>(oscillators.size()); }

    bool driven() const {
        for (const auto& o : oscillators)
            if (o.drive && o.drive->amplitude != 0.0) return true;
        return false;
    }
};

// K_r > 0 means net quanta emitted into bath r.
struct CountingSpec {
    std::string bath;
};

struct Rates {
    double gamma_down;
    double gamma_up;
};

// Bose occupation at frequency omega, temperature T (hbar = k_B = 1).
inline double bose_occupation(double temperature, double omega) {
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(omega / temperature);
}

inline Rates thermal_rates(double gamma, double temperature, double omega) {
    if (!(gamma > 0.0)) throw ConfigError("thermal_rates: gamma must be positive");
    if (!(omega > 0.0)) throw ConfigError("thermal_rates: omega must be positive");
    if (!(temperature >= 0.0)) throw ConfigError("thermal_rates: temperature must be non-negative");
    const double nbar = bose_occupation(temperature, omega);
    return {(nbar + 1.0) * gamma / 2.0, nbar * gamma / 2.0};
}

inline BathSpec thermal_bath(int oscillator, double gamma, double temperature, double omega,
                             std::string label) {
    const Rates r = thermal_rates(gamma, temperature, omega);
    return BathSpec{oscillator, r.gamma_down, r.gamma_up, cplx{}, std::move(label)};
}

// Adds (g/2)(x_i - x_j)^2 in the x = a + a^dagger convention: a frequency and
// squeezing shift on both oscillators plus an xx coupling of strength -g.
inline void add_relative_xx(NetworkSpec& net, int i, int j, double g) {
    for (int k : {i, j}) {
        auto& o = net.oscillators.at(static_cast<std::size_t>(k));
        o.omega += g;
        o.upsilon += cplx{g / 2.0, 0.0};
    }
    net.couplings.push_back({i, j, CouplingKind::xx, -g});
}

struct AggregateRates {
    double gamma_down = 0.0;
    double gamma_up = 0.0;
    cplx lambda{0.0, 0.0};
};

struct Issue {
    enum class Severity { error, warning };
    Severity severity;
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Issue> issues;
    std::vector<AggregateRates> aggregate;

    bool ok() const {
        for (const auto& i : issues)
            if (i.severity == Issue::Severity::error) return false;
        return true;
    }

    bool has(const std::string& code) const {
        for (const auto& i : issues)
            if (i.code == code) return true;
        return false;
    }
};

inline ValidationReport validate(const NetworkSpec& net) {
    ValidationReport rep;
    auto error = [&](std::string code, std::string msg) {
        rep.issues.push_back({Issue::Severity::error, std::move(code), std::move(msg)});
    };
    auto warn = [&](std::string code, std::string msg) {
        rep.issues.push_back({Issue::Severity::warning, std::move(code), std::move(msg)});
    };

    const int n = net.size();
    if (n == 0) error("empty-network", "network has no oscillators");

    for (int k = 0; k < n; ++k) {
        const auto& o = net.oscillators[static_cast<std::size_t>(k)];
        if (!(o.omega > 0.0) || !std::isfinite(o.omega))
            error("bad-frequency", "oscillator " + std::to_string(k) + ": omega must be positive");
        if (!std::isfinite(std::abs(o.upsilon)))
            error("bad-squeezing", "oscillator " + std::to_string(k) + ": upsilon not finite");
        if (o.drive) {
            if (!(o.drive->amplitude >= 0.0))
                error("bad-drive", "oscillator " + std::to_string(k) + ": drive amplitude must be >= 0");
            if (o.drive->kind == DriveSpec::Kind::sinusoidal && !(o.drive->frequency > 0.0))
                error("bad-drive", "oscillator " + std::to_string(k) + ": sinusoidal drive needs frequency > 0");
        }
    }

    std::set<std::pair<int, int>> pairs;
    for (const auto& c : net.couplings) {
        if (c.i < 0 || c.i >= n || c.j < 0 || c.j >= n) {
            error("index-out-of-range", "coupling (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                                            ") refers to a missing oscillator");
            continue;
        }
        if (c.i == c.j) {
            error("self-coupling", "coupling of oscillator " + std::to_string(c.i) + " with itself");
            continue;
        }
        if (!std::isfinite(c.g)) error("bad-coupling", "coupling strength not finite");
        auto key = std::minmax(c.i, c.j);
        if (!pairs.insert(key).second)
            error("duplicate-coupling", "more than one coupling between oscillators " +
                                            std::to_string(key.first) + " and " + std::to_string(key.second));
    }

    rep.aggregate.assign(static_cast<std::size_t>(std::max(n, 0)), AggregateRates{});
    std::set<std::string> labels;
    for (std::size_t b = 0; b < net.baths.size(); ++b) {
        const auto& bath = net.baths[b];
        const std::string name = bath.label.empty() ? "#" + std::to_string(b) : bath.label;
        if (bath.oscillator < 0 || bath.oscillator >= n) {
            error("index-out-of-range", "bath " + name + " attached to a missing oscillator");
            continue;
        }
        if (!(bath.gamma_down >= 0.0) || !(bath.gamma_up >= 0.0))
            error("negative-rate", "bath " + name + ": rates must be non-negative");
        else if (!(bath.gamma_down + bath.gamma_up > 0.0))
            error("zero-rates", "bath " + name + ": gamma_down + gamma_up must be positive");
        if (!std::isfinite(bath.gamma_down) || !std::isfinite(bath.gamma_up))
            error("negative-rate", "bath " + name + ": rates must be finite");
        if (!bath.label.empty() && !labels.insert(bath.label).second)
            error("duplicate-label", "bath label " + bath.label + " used twice");
        auto& agg = rep.aggregate[static_cast<std::size_t>(bath.oscillator)];
        agg.gamma_down += bath.gamma_down;
        agg.gamma_up += bath.gamma_up;
        agg.lambda += bath.lambda;
    }

    for (int k = 0; k < n; ++k) {
        bool has_bath = false;
        for (const auto& b : net.baths) has_bath = has_bath || b.oscillator == k;
        if (!has_bath) warn("undamped-oscillator", "oscillator " + std::to_string(k) + " has no bath");
    }
    return rep;
}

inline void require_valid(const NetworkSpec& net) {
    const auto rep = validate(net);
    for (const auto& i : rep.issues)
        if (i.severity == Issue::Severity::error) throw ConfigError(i.code + ": " + i.message);
}

inline std::size_t bath_index(const NetworkSpec& net, const CountingSpec& counting) {
    for (std::size_t b = 0; b < net.baths.size(); ++b)
        if (net.baths[b].label == counting.bath) return b;
    throw ConfigError("counting bath '" + counting.bath + "' does not exist");
}

inline const BathSpec& resolve_bath(const NetworkSpec& net, const CountingSpec& counting) {
    return net.baths[bath_index(net, counting)];
}

} // namespace gaussldt
