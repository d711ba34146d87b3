#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "csv.hpp"
#include "ldf.hpp"

namespace gaussldt {

struct SminResult {
    enum class Flag { interior, boundary, degenerate };

    double s_min = 0.0;
    double theta_min = 0.0;
    Flag flag = Flag::interior;
};

struct SminOptions {
    int coarse_points = 41;
    double tol = 1e-8;            // golden-section bracket width
    double flat_tol = 1e-12;      // flat if |theta| stays below this times the tilt size
    bool derivative_polish = true;
};

// Coarse grid, golden section, then the zero of the symmetric difference
// quotient (exact at the centre of a symmetric curve).
inline SminResult find_smin(const ThetaEvaluator& ev, const Domain& dom, const SminOptions& opt = {}) {
    const double pad = std::max(10.0 * ev.options().boundary_tol, 1e-9);
    const double lo = dom.lo + pad, hi = dom.hi - pad;
    if (!(hi > lo)) throw DomainEmpty("domain too narrow to locate the minimum of theta");

    const int n = std::max(opt.coarse_points, 5);
    std::vector<double> xs(static_cast<std::size_t>(n)), ys(xs.size());
    double scale = 0.0, tilt = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        xs[static_cast<std::size_t>(i)] = x;
        ys[static_cast<std::size_t>(i)] = ev(x);
        scale = std::max(scale, std::abs(ys[static_cast<std::size_t>(i)]));
        const auto [fp, fm] = bias_functions(ev.bath(), x);
        tilt = std::max(tilt, std::abs(fp) + std::abs(fm));
    }
    SminResult out;
    if (scale <= opt.flat_tol * std::max(tilt, 1.0)) {
        out.s_min = 0.0;
        out.theta_min = ev(0.0);
        out.flag = SminResult::Flag::degenerate;
        return out;
    }
    const auto it = std::min_element(ys.begin(), ys.end());
    const int k = static_cast<int>(it - ys.begin());
    double a = xs[static_cast<std::size_t>(std::max(k - 1, 0))];
    double b = xs[static_cast<std::size_t>(std::min(k + 1, n - 1))];

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = ev(c), fd = ev(d);
    while (b - a > opt.tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = ev(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = ev(d);
        }
    }
    double sm = 0.5 * (a + b);

    if (opt.derivative_polish) {
        const double h = std::max(1e-5 * (hi - lo), 1e-9);
        auto slope = [&](double s) { return (ev(s + h) - ev(s - h)) / (2.0 * h); };
        double w = 4.0 * opt.tol;
        double l = std::max(lo + h, sm - w), r = std::min(hi - h, sm + w);
        double gl = slope(l), gr = slope(r);
        while (!(gl < 0.0 && gr > 0.0) && w < 0.05 * (hi - lo)) {
            w *= 4.0;
            l = std::max(lo + h, sm - w);
            r = std::min(hi - h, sm + w);
            gl = slope(l);
            gr = slope(r);
        }
        if (gl < 0.0 && gr > 0.0) {
            for (int it2 = 0; it2 < 200 && r - l > 1e-14 * std::max(1.0, std::abs(sm)); ++it2) {
                const double m = 0.5 * (l + r);
                const double gm = slope(m);
                if (gm == 0.0) {
                    l = r = m;
                    break;
                }
                (gm < 0.0 ? l : r) = m;
            }
            sm = 0.5 * (l + r);
        }
    }
    out.s_min = sm;
    out.theta_min = ev(sm);
    const double edge = std::max(1e-6, 2.0 * opt.tol);
    if (sm - lo < edge || hi - sm < edge) out.flag = SminResult::Flag::boundary;
    return out;
}

struct SymResult {
    std::optional<double> value;
    std::string reason;
};

// |theta(2 s_min) / theta(s_min)|.
inline SymResult sym_criterion(const ThetaEvaluator& ev, double s_min) {
    const ThetaPoint pm = ev.point(s_min);
    if (!pm.solvable) return {std::nullopt, "s_min outside the domain"};
    if (pm.theta == 0.0) return {std::nullopt, "theta(s_min) = 0 (flat curve)"};
    const double s2 = 2.0 * s_min;
    if (!ev.domain().contains(s2)) return {std::nullopt, "2 s_min outside the domain"};
    const ThetaPoint p2 = ev.point(s2);
    if (!p2.solvable) return {std::nullopt, "2 s_min outside the domain"};
    return {std::abs(p2.theta / pm.theta), ""};
}

struct AnalyticPrediction {
    double value;
    std::string template_name;
};

namespace detail {

inline bool plain_oscillators(const NetworkSpec& net) {
    for (const auto& o : net.oscillators)
        if (o.upsilon != cplx{} || (o.drive && o.drive->amplitude != 0.0)) return false;
    for (const auto& b : net.baths)
        if (b.lambda != cplx{}) return false;
    return true;
}

inline bool uniform_frequency(const NetworkSpec& net) {
    for (const auto& o : net.oscillators)
        if (o.omega != net.oscillators.front().omega) return false;
    return true;
}

inline bool only_kind(const NetworkSpec& net, CouplingKind k) {
    for (const auto& c : net.couplings)
        if (c.kind != k) return false;
    return true;
}

// Two-colouring of the coupling graph; empty if not bipartite or not connected.
inline std::vector<int> bipartition(const NetworkSpec& net) {
    const int n = net.size();
    std::vector<int> colour(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& c : net.couplings) {
        adj[static_cast<std::size_t>(c.i)].push_back(c.j);
        adj[static_cast<std::size_t>(c.j)].push_back(c.i);
    }
    std::queue<int> q;
    colour[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            auto& cv = colour[static_cast<std::size_t>(v)];
            if (cv < 0) {
                cv = 1 - colour[static_cast<std::size_t>(u)];
                q.push(v);
            } else if (cv == colour[static_cast<std::size_t>(u)]) {
                return {};
            }
        }
    }
    for (int c : colour)
        if (c < 0) return {};
    return colour;
}

} // namespace detail

inline std::optional<AnalyticPrediction> analytic_sympoint(const NetworkSpec& net, const CountingSpec& counting) {
    const std::size_t r = bath_index(net, counting);
    const BathSpec& ref = net.baths[r];
    if (!detail::plain_oscillators(net) || !detail::uniform_frequency(net)) return std::nullopt;
    if (!(ref.gamma_up > 0.0) || !(ref.gamma_down > 0.0)) return std::nullopt;

    auto exchange_formula = [&]() -> std::optional<double> {
        double up = 0.0, down = 0.0;
        for (std::size_t i = 0; i < net.baths.size(); ++i) {
            if (i == r) continue;
            up += net.baths[i].gamma_up;
            down += net.baths[i].gamma_down;
        }
        if (!(up > 0.0) || !(down > 0.0)) return std::nullopt;
        return std::log((ref.gamma_down / ref.gamma_up) * (up / down));
    };

    if (net.size() == 1 && net.baths.size() >= 2) {
        if (auto v = exchange_formula()) return AnalyticPrediction{*v, "single-oscillator"};
        return std::nullopt;
    }
    if (net.size() < 2 || net.baths.size() != 2 || net.couplings.empty()) return std::nullopt;
    const BathSpec& other = net.baths[1 - r];
    if (other.oscillator == ref.oscillator) return std::nullopt;

    if (detail::only_kind(net, CouplingKind::rw)) {
        if (auto v = exchange_formula()) return AnalyticPrediction{*v, "rw-network"};
        return std::nullopt;
    }
    if (detail::only_kind(net, CouplingKind::opo)) {
        const auto colour = detail::bipartition(net);
        if (colour.empty()) return std::nullopt;
        if (colour[static_cast<std::size_t>(ref.oscillator)] == colour[static_cast<std::size_t>(other.oscillator)])
            return std::nullopt;
        if (!(other.gamma_up > 0.0)) return std::nullopt;
        return AnalyticPrediction{std::log(ref.gamma_down * other.gamma_down / (ref.gamma_up * other.gamma_up)),
                                  "opo-network"};
    }
    return std::nullopt;
}

struct FtReport {
    enum class Verdict { holds, broken, degenerate, undefined };

    double s_min = std::numeric_limits<double>::quiet_NaN();
    double s_candidate = std::numeric_limits<double>::quiet_NaN();
    double theta_min = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> sym_value;
    std::string sym_note;
    bool holds = false;
    double threshold = 1e-2;
    Verdict verdict = Verdict::undefined;
    SminResult::Flag smin_flag = SminResult::Flag::interior;
    std::optional<AnalyticPrediction> analytic;
    double curve_defect = std::numeric_limits<double>::quiet_NaN();
    Domain domain;
};

inline const char* to_string(FtReport::Verdict v) {
    switch (v) {
    case FtReport::Verdict::holds: return "holds";
    case FtReport::Verdict::broken: return "broken";
    case FtReport::Verdict::degenerate: return "degenerate";
    case FtReport::Verdict::undefined: return "undefined";
    }
    return "?";
}

// max |theta(s) - theta(2 s_min - s)| over the mirrored part of the domain.
inline double symmetry_defect(const ThetaEvaluator& ev, const Domain& dom, double s_min, int samples = 41) {
    const double pad = 10.0 * ev.options().boundary_tol;
    const double lo = std::max(dom.lo, 2.0 * s_min - dom.hi) + pad;
    const double hi = std::min(dom.hi, 2.0 * s_min - dom.lo) - pad;
    if (!(hi > lo)) return std::numeric_limits<double>::quiet_NaN();
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double s = lo + (hi - lo) * i / (samples - 1);
        worst = std::max(worst, std::abs(ev(s) - ev(2.0 * s_min - s)));
    }
    return worst;
}

inline FtReport ft_report(const ThetaEvaluator& ev, double threshold = 1e-2, const SminOptions& opt = {}) {
    FtReport rep;
    rep.threshold = threshold;
    rep.domain = ev.domain();
    rep.analytic = analytic_sympoint(ev.network(), ev.counting());
    const SminResult sm = find_smin(ev, rep.domain, opt);
    rep.s_min = sm.s_min;
    rep.s_candidate = 2.0 * sm.s_min;
    rep.theta_min = sm.theta_min;
    rep.smin_flag = sm.flag;
    if (sm.flag == SminResult::Flag::degenerate) {
        rep.verdict = FtReport::Verdict::degenerate;
        rep.sym_note = "theta is flat";
        return rep;
    }
    const SymResult sym = sym_criterion(ev, sm.s_min);
    rep.sym_value = sym.value;
    rep.sym_note = sym.reason;
    rep.curve_defect = symmetry_defect(ev, rep.domain, sm.s_min);
    if (!sym.value || sm.flag == SminResult::Flag::boundary) {
        rep.verdict = FtReport::Verdict::undefined;
        if (sm.flag == SminResult::Flag::boundary && rep.sym_note.empty()) rep.sym_note = "minimum at domain boundary";
        return rep;
    }
    rep.holds = *sym.value < threshold;
    rep.verdict = rep.holds ? FtReport::Verdict::holds : FtReport::Verdict::broken;
    return rep;
}

struct SweepRow {
    double param_value = 0.0;
    std::optional<FtReport> report;
    std::string error;
};

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "param_value,s_min,s_candidate,sym,holds,analytic\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
        if (!r.report) {
            csv::row(out, {csv::num(r.param_value), "nan", "nan", "nan", "0", "nan"});
            continue;
        }
        const FtReport& f = *r.report;
        csv::row(out, {csv::num(r.param_value), csv::num(f.s_min), csv::num(f.s_candidate),
                       csv::num(f.sym_value.value_or(nan)), f.holds ? "1" : "0",
                       csv::num(f.analytic ? f.analytic->value : nan)});
    }
}

} // namespace gaussldt
