#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "phasespace.hpp"
#include "solver.hpp"

namespace gaussldt {

struct EvaluatorOptions {
    RiccatiOptions riccati;
    FirstMomentOptions moment;
    double s_cap = 10.0;         // domain search stops here
    double boundary_tol = 1e-6;  // branch-point bisection width
    double first_step = 1e-3;
    double growth = 1.25;
};

struct ThetaPoint {
    enum class Route { covariance, newton, spectral, none };

    double s = 0.0;
    bool solvable = false;
    double theta = std::numeric_limits<double>::quiet_NaN();
    double closed_loop_margin = std::numeric_limits<double>::quiet_NaN();
    Route route = Route::none;
    std::optional<BiasedCovariance> covariance;
};

struct Domain {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_capped = false;
    bool hi_capped = false;

    bool contains(double s) const {
        return (s >= lo || lo_capped) && (s <= hi || hi_capped);
    }
    double width() const { return hi - lo; }
};

// theta_r(s) for one network and reference bath. Thread-safe; results are
// cached by s.
class ThetaEvaluator {
public:
    ThetaEvaluator(NetworkSpec net, CountingSpec counting, EvaluatorOptions opt = {})
        : sys_(assemble(net)), counting_(std::move(counting)), opt_(opt) {
        bath_ = resolve_bath(sys_.network, counting_);
        const double margin = stability_margin(sys_.drift);
        if (!(margin < 0.0))
            throw InstabilityError("network is not stable (drift margin " + csv::num(margin) +
                                   "); no stationary state");
        trace_a_ = sys_.drift.trace();
    }

    const PhaseSpaceSystem& system() const { return sys_; }
    const NetworkSpec& network() const { return sys_.network; }
    const CountingSpec& counting() const { return counting_; }
    const BathSpec& bath() const { return bath_; }
    const EvaluatorOptions& options() const { return opt_; }

    ThetaPoint point(double s) const {
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(s);
            if (it != cache_.end()) return it->second;
        }
        ThetaPoint p = compute(s);
        std::lock_guard<std::mutex> lock(mu_);
        cache_.emplace(s, p);
        return p;
    }

    bool solvable(double s) const { return point(s).solvable; }

    double operator()(double s) const {
        const ThetaPoint p = point(s);
        if (!p.solvable)
            throw DomainBoundary(s, DomainBoundary::Reason::dichotomy,
                                 "s = " + csv::num(s) + " lies outside the domain of theta");
        return p.theta;
    }

    // Connected component of the solvable set around s = 0.
    Domain domain() const {
        {
            std::lock_guard<std::mutex> lock(mu_);
            if (domain_) return *domain_;
        }
        Domain d;
        std::tie(d.hi, d.hi_capped) = march(+1.0);
        std::tie(d.lo, d.lo_capped) = march(-1.0);
        d.lo = -d.lo;
        std::lock_guard<std::mutex> lock(mu_);
        domain_ = d;
        return d;
    }

    // Bias value normalising the axes: ln(Gamma_r / Gamma_bar_r), i.e. omega_r / T_r
    // for a thermal bath.
    std::optional<double> natural_scale() const {
        if (!(bath_.gamma_up > 0.0) || !(bath_.gamma_down > 0.0)) return std::nullopt;
        return std::log(bath_.gamma_down / bath_.gamma_up);
    }

private:
    ThetaPoint compute(double s) const {
        const BiasMatrices b = assemble_bias(sys_.network, counting_, s);
        const RiccatiData data = riccati_data(sys_, b);
        RiccatiAnalysis an = analyze_riccati(data, s, opt_.riccati);
        ThetaPoint p;
        p.s = s;
        if (!an.dichotomy) return p;
        p.closed_loop_margin = an.closed_loop_margin;
        if (an.covariance) {
            p.route = ThetaPoint::Route::covariance;
            p.covariance = an.covariance;
        } else if (auto seed = nearest_covariance(s)) {
            try {
                p.covariance = solve_riccati_newton(data, *seed, s, 30, opt_.riccati);
                p.route = ThetaPoint::Route::newton;
            } catch (const Error&) {
            }
        }
        if (p.covariance) {
            const auto& sg = p.covariance->sigma;
            const int k = 2 * b.oscillator;
            const long double tr = static_cast<long double>(sg(k, k)) + sg(k + 1, k + 1);
            p.theta = static_cast<double>(0.5L * b.fp_ext * tr - b.fm_ext);
            p.closed_loop_margin = p.covariance->closed_loop_margin;
        } else {
            p.route = ThetaPoint::Route::spectral;
            p.theta = 0.5 * (an.stable_sum - trace_a_);
        }
        if (sys_.driven()) {
            if (!p.covariance) {
                p.solvable = false;
                p.route = ThetaPoint::Route::none;
                return p;
            }
            const FirstMomentPath fm = integrate_first_moment(sys_, b, *p.covariance,
                                                              VectorXd::Zero(sys_.dim()), opt_.moment);
            p.theta += fm.time_average_quadratic;
        }
        p.solvable = std::isfinite(p.theta);
        return p;
    }

    std::optional<MatrixXd> nearest_covariance(double s) const {
        std::lock_guard<std::mutex> lock(mu_);
        const MatrixXd* best = nullptr;
        double dist = std::numeric_limits<double>::infinity();
        for (const auto& [key, pt] : cache_) {
            if (!pt.covariance) continue;
            if (std::abs(key - s) < dist) {
                dist = std::abs(key - s);
                best = &pt.covariance->sigma;
            }
        }
        if (!best) return std::nullopt;
        return *best;
    }

    // Returns (|boundary|, capped) along direction dir.
    std::pair<double, bool> march(double dir) const {
        double inside = 0.0, step = opt_.first_step;
        for (;;) {
            double next = inside + step;
            if (next >= opt_.s_cap) {
                next = opt_.s_cap;
                if (solvable(dir * next)) return {next, true};
            }
            if (!solvable(dir * next)) {
                double out = next;
                while (out - inside > opt_.boundary_tol) {
                    const double mid = 0.5 * (inside + out);
                    (solvable(dir * mid) ? inside : out) = mid;
                }
                return {inside, false};
            }
            inside = next;
            step *= opt_.growth;
        }
    }

    PhaseSpaceSystem sys_;
    CountingSpec counting_;
    EvaluatorOptions opt_;
    BathSpec bath_;
    double trace_a_ = 0.0;
    mutable std::mutex mu_;
    mutable std::map<double, ThetaPoint> cache_;
    mutable std::optional<Domain> domain_;
};

inline double theta_stationary(const NetworkSpec& net, const CountingSpec& counting, double s) {
    if (net.driven()) throw ConfigError("theta_stationary requires an undriven network");
    return ThetaEvaluator(net, counting)(s);
}

inline double theta_driven(const NetworkSpec& net, const CountingSpec& counting, double s,
                           double horizon = 0.0) {
    EvaluatorOptions opt;
    opt.moment.horizon = horizon;
    return ThetaEvaluator(net, counting, opt)(s);
}

struct ThetaCurve {
    std::vector<double> s_grid;
    std::vector<double> theta;
    std::vector<bool> solvable;
    std::vector<double> closed_loop_margin;
    Domain domain;
    std::string reference_bath;
};

inline ThetaCurve theta_curve(const ThetaEvaluator& ev, double s_lo, double s_hi, int n_points,
                              unsigned threads = 1) {
    if (n_points < 1) throw ConfigError("theta_curve: need at least one grid point");
    if (n_points > 1 && !(s_hi > s_lo)) throw ConfigError("theta_curve: empty s-range");
    ThetaCurve c;
    c.reference_bath = ev.counting().bath;
    c.domain = ev.domain();
    const auto n = static_cast<std::size_t>(n_points);
    c.s_grid.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        c.s_grid[i] = n == 1 ? s_lo : s_lo + (s_hi - s_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    c.theta.assign(n, std::numeric_limits<double>::quiet_NaN());
    c.closed_loop_margin = c.theta;
    std::vector<char> ok(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        const double s = c.s_grid[i];
        if (!c.domain.contains(s)) return;
        const ThetaPoint p = ev.point(s);
        if (!p.solvable) return;
        ok[i] = 1;
        c.theta[i] = p.theta;
        c.closed_loop_margin[i] = p.closed_loop_margin;
    });
    c.solvable.assign(ok.begin(), ok.end());
    if (std::none_of(ok.begin(), ok.end(), [](char v) { return v != 0; }))
        throw DomainEmpty("no grid point lies inside the domain of theta");
    return c;
}

// 201 points over [-1.5, 1.5] s_c, clipped to the domain.
inline ThetaCurve default_theta_curve(const ThetaEvaluator& ev, unsigned threads = 1, int n_points = 201) {
    const Domain d = ev.domain();
    double lo = d.lo, hi = d.hi;
    if (auto sc = ev.natural_scale()) {
        const double a = std::abs(*sc);
        lo = std::max(lo, -1.5 * a);
        hi = std::min(hi, 1.5 * a);
    }
    return theta_curve(ev, lo, hi, n_points, threads);
}

inline void write_theta_csv(std::ostream& out, const ThetaCurve& c) {
    out << "s,theta,solvable,closed_loop_margin\n";
    for (std::size_t i = 0; i < c.s_grid.size(); ++i)
        csv::row(out, {csv::num(c.s_grid[i]), csv::num(c.theta[i]), c.solvable[i] ? "1" : "0",
                       csv::num(c.closed_loop_margin[i])});
}

struct CumulantSet {
    std::vector<double> kappa; // kappa[0] is the first cumulant
};

// Default stencil step: 1e-3, shrunk to 2% of the distance from 0 to the
// nearest branch point.
inline double default_cumulant_step(const ThetaEvaluator& ev) {
    const Domain d = ev.domain();
    const double hi = d.hi_capped ? ev.options().s_cap : d.hi;
    const double lo = d.lo_capped ? ev.options().s_cap : -d.lo;
    return std::min(1e-3, 0.02 * std::min(hi, lo));
}

// kappa_n = (-1)^n d^n theta / ds^n at 0 by central differences with
// Richardson extrapolation over steps h, h/2, ...  h = 0 picks the default.
inline CumulantSet cumulants(const ThetaEvaluator& ev, int n_max = 2, double h = 0.0, int levels = 0) {
    if (n_max < 1) throw ConfigError("cumulants: n_max must be >= 1");
    if (h < 0.0 || !std::isfinite(h)) throw ConfigError("cumulants: h must be positive");
    if (h == 0.0) h = default_cumulant_step(ev);
    if (levels <= 0) levels = n_max + 1;
    CumulantSet out;
    for (int k = 1; k <= n_max; ++k) {
        std::vector<double> r(static_cast<std::size_t>(levels));
        for (int m = 0; m < levels; ++m) {
            const double hm = h / std::pow(2.0, m);
            double acc = 0.0, binom = 1.0;
            for (int j = 0; j <= k; ++j) {
                const double s = (0.5 * k - j) * hm;
                const ThetaPoint p = ev.point(s);
                if (!p.solvable)
                    throw DomainBoundary(s, DomainBoundary::Reason::dichotomy,
                                         "domain too narrow around 0 for the cumulant stencil");
                acc += ((j % 2) ? -binom : binom) * p.theta;
                binom = binom * (k - j) / (j + 1);
            }
            r[static_cast<std::size_t>(m)] = acc / std::pow(hm, k);
        }
        // Error expansion in even powers of h.
        for (int lev = 1; lev < levels; ++lev) {
            const double f = std::pow(4.0, lev);
            for (int m = levels - 1; m >= lev; --m)
                r[static_cast<std::size_t>(m)] =
                    (f * r[static_cast<std::size_t>(m)] - r[static_cast<std::size_t>(m - 1)]) / (f - 1.0);
        }
        const double deriv = r.back();
        out.kappa.push_back((k % 2 ? -1.0 : 1.0) * deriv);
    }
    return out;
}

// First cumulant from the unbiased covariance alone.
inline double first_cumulant_identity(const ThetaEvaluator& ev) {
    const auto& sys = ev.system();
    const MatrixXd sigma = solve_lyapunov(sys.drift, sys.noise);
    const BathSpec& b = ev.bath();
    const int k = 2 * b.oscillator;
    return 0.5 * (b.gamma_down - b.gamma_up) * (sigma(k, k) + sigma(k + 1, k + 1)) - (b.gamma_down + b.gamma_up);
}

} // namespace gaussldt
