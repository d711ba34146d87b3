#pragma once

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace gaussldt::config {

using json = nlohmann::json;

struct BathEntry {
    int oscillator = 0;
    std::string label;
    std::optional<double> gamma; // thermal shorthand
    std::optional<double> temperature;
    double gamma_down = 0.0;
    double gamma_up = 0.0;
    cplx lambda{};

    bool thermal() const { return gamma.has_value(); }
};

struct CouplingEntry {
    int i = 0;
    int j = 1;
    std::string kind = "rw"; // xx, rw, opo, or xx_relative
    double g = 0.0;
};

struct SweepEntry {
    std::string param;
    std::vector<double> values;
};

// The document as written; build() turns it into a NetworkSpec.
struct ModelConfig {
    std::vector<OscillatorSpec> oscillators;
    std::vector<CouplingEntry> couplings;
    std::vector<BathEntry> baths;
    std::optional<std::string> counting_bath;
    std::optional<SweepEntry> sweep;

    NetworkSpec build() const {
        NetworkSpec net;
        net.oscillators = oscillators;
        const int n = static_cast<int>(oscillators.size());
        for (const auto& b : baths) {
            BathSpec spec;
            spec.oscillator = b.oscillator;
            spec.label = b.label;
            spec.lambda = b.lambda;
            if (b.thermal()) {
                if (b.oscillator < 0 || b.oscillator >= n)
                    throw ConfigError("bath " + b.label + " attached to a missing oscillator");
                const double omega = oscillators[static_cast<std::size_t>(b.oscillator)].omega;
                const Rates r = thermal_rates(*b.gamma, b.temperature.value_or(0.0), omega);
                spec.gamma_down = r.gamma_down;
                spec.gamma_up = r.gamma_up;
            } else {
                spec.gamma_down = b.gamma_down;
                spec.gamma_up = b.gamma_up;
            }
            net.baths.push_back(spec);
        }
        for (const auto& c : couplings) {
            if (c.kind == "xx_relative") {
                if (c.i < 0 || c.i >= n || c.j < 0 || c.j >= n || c.i == c.j)
                    throw ConfigError("xx_relative coupling has invalid indices");
                add_relative_xx(net, c.i, c.j, c.g);
                continue;
            }
            CouplingSpec cs;
            cs.i = c.i;
            cs.j = c.j;
            cs.g = c.g;
            if (c.kind == "xx") cs.kind = CouplingKind::xx;
            else if (c.kind == "rw") cs.kind = CouplingKind::rw;
            else if (c.kind == "opo") cs.kind = CouplingKind::opo;
            else throw ConfigError("unknown coupling kind '" + c.kind + "'");
            net.couplings.push_back(cs);
        }
        return net;
    }

    CountingSpec counting(const std::optional<std::string>& override_label = std::nullopt) const {
        if (override_label) return {*override_label};
        if (counting_bath) return {*counting_bath};
        if (baths.empty()) throw ConfigError("network has no baths to count");
        return {baths.front().label};
    }
};

namespace detail {

inline void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j, key, where) : fallback;
}

inline int index(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + ": '" + key + "' must be an integer");
    return v.get<int>();
}

// A number or a [re, im] pair.
inline cplx complex_value(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) return {};
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError(where + ": '" + key + "' must be a number or [re, im]");
}

inline std::string text(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace detail

inline ModelConfig parse(const json& doc) {
    using namespace detail;
    only_keys(doc, {"oscillators", "couplings", "baths", "counting", "sweep"}, "config");
    ModelConfig cfg;

    if (!doc.contains("oscillators") || !doc.at("oscillators").is_array())
        throw ConfigError("config: 'oscillators' must be an array");
    int k = 0;
    for (const auto& o : doc.at("oscillators")) {
        const std::string where = "oscillators[" + std::to_string(k++) + "]";
        only_keys(o, {"omega", "upsilon", "drive"}, where);
        OscillatorSpec spec;
        spec.omega = number_or(o, "omega", 1.0, where);
        spec.upsilon = complex_value(o, "upsilon", where);
        if (o.contains("drive")) {
            const json& d = o.at("drive");
            only_keys(d, {"kind", "amplitude", "frequency", "phase"}, where + ".drive");
            DriveSpec drive;
            const std::string kind = d.contains("kind") ? text(d, "kind", where + ".drive") : "constant";
            if (kind == "constant") drive.kind = DriveSpec::Kind::constant;
            else if (kind == "sinusoidal") drive.kind = DriveSpec::Kind::sinusoidal;
            else throw ConfigError(where + ".drive: unknown kind '" + kind + "'");
            drive.amplitude = number(d, "amplitude", where + ".drive");
            drive.frequency = number_or(d, "frequency", 0.0, where + ".drive");
            drive.phase = number_or(d, "phase", 0.0, where + ".drive");
            spec.drive = drive;
        }
        cfg.oscillators.push_back(spec);
    }

    if (doc.contains("couplings")) {
        if (!doc.at("couplings").is_array()) throw ConfigError("config: 'couplings' must be an array");
        k = 0;
        for (const auto& c : doc.at("couplings")) {
            const std::string where = "couplings[" + std::to_string(k++) + "]";
            only_keys(c, {"i", "j", "kind", "g"}, where);
            CouplingEntry e;
            e.i = index(c, "i", where);
            e.j = index(c, "j", where);
            e.kind = text(c, "kind", where);
            if (e.kind != "xx" && e.kind != "rw" && e.kind != "opo" && e.kind != "xx_relative")
                throw ConfigError(where + ": unknown coupling kind '" + e.kind + "'");
            e.g = number(c, "g", where);
            cfg.couplings.push_back(e);
        }
    }

    if (doc.contains("baths")) {
        if (!doc.at("baths").is_array()) throw ConfigError("config: 'baths' must be an array");
        k = 0;
        for (const auto& b : doc.at("baths")) {
            const std::string where = "baths[" + std::to_string(k) + "]";
            only_keys(b, {"oscillator", "label", "gamma_down", "gamma_up", "gamma", "T", "lambda"}, where);
            BathEntry e;
            e.oscillator = index(b, "oscillator", where);
            e.label = b.contains("label") ? text(b, "label", where) : std::to_string(k);
            e.lambda = complex_value(b, "lambda", where);
            const bool raw = b.contains("gamma_down") || b.contains("gamma_up");
            const bool thermal = b.contains("gamma") || b.contains("T");
            if (raw == thermal)
                throw ConfigError(where + ": give either gamma_down/gamma_up or the {gamma, T} shorthand");
            if (thermal) {
                e.gamma = number(b, "gamma", where);
                e.temperature = number(b, "T", where);
                if (!(*e.gamma > 0.0) || !(*e.temperature >= 0.0))
                    throw ConfigError(where + ": need gamma > 0 and T >= 0");
            } else {
                e.gamma_down = number_or(b, "gamma_down", 0.0, where);
                e.gamma_up = number_or(b, "gamma_up", 0.0, where);
            }
            cfg.baths.push_back(e);
            ++k;
        }
    }

    if (doc.contains("counting")) {
        const json& c = doc.at("counting");
        only_keys(c, {"bath"}, "counting");
        cfg.counting_bath = text(c, "bath", "counting");
    }

    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        only_keys(s, {"param", "values"}, "sweep");
        SweepEntry e;
        e.param = text(s, "param", "sweep");
        if (!s.contains("values") || !s.at("values").is_array()) throw ConfigError("sweep: 'values' must be an array");
        for (const auto& v : s.at("values")) {
            if (!v.is_number()) throw ConfigError("sweep: values must be numbers");
            e.values.push_back(v.get<double>());
        }
        cfg.sweep = e;
    }
    return cfg;
}

inline ModelConfig parse_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse(doc);
}

inline ModelConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

inline json to_json(const ModelConfig& cfg) {
    auto cnum = [](cplx z) { return z.imag() == 0.0 ? json(z.real()) : json::array({z.real(), z.imag()}); };
    json doc;
    doc["oscillators"] = json::array();
    for (const auto& o : cfg.oscillators) {
        json j;
        j["omega"] = o.omega;
        if (o.upsilon != cplx{}) j["upsilon"] = cnum(o.upsilon);
        if (o.drive) {
            json d;
            d["kind"] = o.drive->kind == DriveSpec::Kind::constant ? "constant" : "sinusoidal";
            d["amplitude"] = o.drive->amplitude;
            if (o.drive->kind == DriveSpec::Kind::sinusoidal) {
                d["frequency"] = o.drive->frequency;
                d["phase"] = o.drive->phase;
            }
            j["drive"] = d;
        }
        doc["oscillators"].push_back(j);
    }
    doc["couplings"] = json::array();
    for (const auto& c : cfg.couplings) doc["couplings"].push_back({{"i", c.i}, {"j", c.j}, {"kind", c.kind}, {"g", c.g}});
    doc["baths"] = json::array();
    for (const auto& b : cfg.baths) {
        json j{{"oscillator", b.oscillator}, {"label", b.label}};
        if (b.thermal()) {
            j["gamma"] = *b.gamma;
            j["T"] = b.temperature.value_or(0.0);
        } else {
            j["gamma_down"] = b.gamma_down;
            j["gamma_up"] = b.gamma_up;
        }
        if (b.lambda != cplx{}) j["lambda"] = cnum(b.lambda);
        doc["baths"].push_back(j);
    }
    if (cfg.counting_bath) doc["counting"] = {{"bath", *cfg.counting_bath}};
    if (cfg.sweep) doc["sweep"] = {{"param", cfg.sweep->param}, {"values", cfg.sweep->values}};
    return doc;
}

// Sweep parameters:
//   T1     temperature of the first thermal bath; the other thermal baths keep
//          their temperature offsets from it
//   g      every coupling strength
//   gamma  every thermal bath's gamma
inline void set_parameter(ModelConfig& cfg, const std::string& param, double value) {
    if (param == "T1") {
        BathEntry* first = nullptr;
        for (auto& b : cfg.baths)
            if (b.thermal()) {
                first = &b;
                break;
            }
        if (!first) throw ConfigError("sweep T1 needs at least one thermal bath");
        const double shift = value - first->temperature.value_or(0.0);
        for (auto& b : cfg.baths)
            if (b.thermal()) b.temperature = b.temperature.value_or(0.0) + shift;
        for (const auto& b : cfg.baths)
            if (b.thermal() && !(*b.temperature >= 0.0)) throw ConfigError("sweep T1 produced a negative temperature");
    } else if (param == "g") {
        if (cfg.couplings.empty()) throw ConfigError("sweep g needs at least one coupling");
        for (auto& c : cfg.couplings) c.g = value;
    } else if (param == "gamma") {
        bool any = false;
        for (auto& b : cfg.baths)
            if (b.thermal()) {
                b.gamma = value;
                any = true;
            }
        if (!any) throw ConfigError("sweep gamma needs at least one thermal bath");
    } else {
        throw ConfigError("unknown sweep parameter '" + param + "' (expected T1, g or gamma)");
    }
}

} // namespace gaussldt::config
