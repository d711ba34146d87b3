#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "phasespace.hpp"

namespace gaussldt {

struct BiasedCovariance {
    MatrixXd sigma;
    double closed_loop_margin = 0.0;
    double s = 0.0;
    double residual = 0.0;
};

// Everything the Hamiltonian-matrix route knows about one bias value.
struct RiccatiAnalysis {
    double s = 0.0;
    bool dichotomy = false;
    double gap = 0.0;                // smallest |Re lambda| of the Hamiltonian matrix
    double stable_sum = 0.0;         // sum of its stable eigenvalues
    double closed_loop_margin = 0.0; // largest real part among them
    std::optional<BiasedCovariance> covariance;
    DomainBoundary::Reason failure = DomainBoundary::Reason::dichotomy;
};

struct RiccatiOptions {
    double axis_tol = 1e-7;        // relative to max(1, |M|_max)
    double max_basis_cond = 1e12;
    double residual_tol = 1e-10;   // relative to max(1, |D|_max)
    int polish_steps = 3;
};

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// At = A - F-, Fp = F+, Q = F+ - 2D, held in extended precision. The tilt
// functions reach e^|s| times the rates, so rounding them to double already
// moves theta by far more than the solver error.
struct RiccatiData {
    MatrixXld at, fp, q;
    double d_scale = 0.0;

    MatrixXd at_d() const { return at.cast<double>(); }
    MatrixXd fp_d() const { return fp.cast<double>(); }
    MatrixXd q_d() const { return q.cast<double>(); }
};

inline RiccatiData riccati_data(const MatrixXd& a, const MatrixXd& d, const MatrixXld& fp, const MatrixXld& fm) {
    RiccatiData r;
    r.at = a.cast<long double>() - fm;
    r.fp = fp;
    r.q = fp - 2.0L * d.cast<long double>();
    r.d_scale = linalg::max_abs(d);
    return r;
}

inline RiccatiData riccati_data(const MatrixXd& a, const MatrixXd& d, const MatrixXd& fp, const MatrixXd& fm) {
    return riccati_data(a, d, MatrixXld(fp.cast<long double>()), MatrixXld(fm.cast<long double>()));
}

inline RiccatiData riccati_data(const PhaseSpaceSystem& sys, const BiasMatrices& b) {
    const Eigen::Index n = sys.drift.rows();
    MatrixXld fp = MatrixXld::Zero(n, n), fm = MatrixXld::Zero(n, n);
    const int k = 2 * b.oscillator;
    fp(k, k) = fp(k + 1, k + 1) = b.fp_ext;
    fm(k, k) = fm(k + 1, k + 1) = b.fm_ext;
    return riccati_data(sys.drift, sys.noise, fp, fm);
}

// R(S) = At S + S At^T + S Fp S + Q.
inline MatrixXd riccati_residual_matrix(const RiccatiData& p, const MatrixXd& s) {
    const MatrixXld x = s.cast<long double>();
    const MatrixXld r = p.at * x + x * p.at.transpose() + x * p.fp * x + p.q;
    return r.cast<double>();
}

inline double riccati_residual(const RiccatiData& p, const MatrixXd& s) {
    return linalg::max_abs(riccati_residual_matrix(p, s));
}

inline double riccati_residual(const MatrixXd& at, const MatrixXd& fp, const MatrixXd& q, const MatrixXd& s) {
    RiccatiData p;
    p.at = at.cast<long double>();
    p.fp = fp.cast<long double>();
    p.q = q.cast<long double>();
    return riccati_residual(p, s);
}

// Unique stationary covariance of the unbiased flow: A S + S A^T = 2 D.
inline MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& d) {
    const double margin = linalg::max_real_eigenvalue(a);
    if (!(margin < 0.0))
        throw InstabilityError("drift matrix is not stable (margin " + std::to_string(margin) +
                               "); no stationary state");
    MatrixXd s = linalg::symmetrize(linalg::lyapunov(a, 2.0 * d));
    const double res = linalg::max_abs(a * s + s * a.transpose() - 2.0 * d);
    if (res > 1e-10 * std::max(1.0, linalg::max_abs(d)))
        throw ConvergenceError("Lyapunov residual too large", res);
    return s;
}

// Newton step on R(S); returns false if the linearised operator is singular.
inline bool riccati_newton_step(const RiccatiData& p, MatrixXd& s) {
    const MatrixXd closed = p.at_d() + s * p.fp_d();
    const MatrixXd r = riccati_residual_matrix(p, s);
    try {
        s = linalg::symmetrize(s + linalg::lyapunov(closed, -r));
    } catch (const Error&) {
        return false;
    }
    return s.allFinite();
}

inline RiccatiAnalysis analyze_riccati(const RiccatiData& p, double s, const RiccatiOptions& opt = {}) {
    const Eigen::Index n = p.at.rows();
    const MatrixXd at = p.at_d(), fp = p.fp_d(), q = p.q_d();
    MatrixXd h(2 * n, 2 * n);
    h << at.transpose(), fp, -q, -at;

    RiccatiAnalysis out;
    out.s = s;
    const double tol = opt.axis_tol * std::max(1.0, linalg::max_abs(h));
    auto stable = [](cplx z) { return z.real() < 0.0; };
    linalg::OrderedSchur sch = linalg::ordered_schur(h.cast<cplx>(), stable);

    int n_neg = 0, n_pos = 0;
    double gap = std::numeric_limits<double>::infinity(), sum = 0.0;
    double cl = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const double re = sch.t(i, i).real();
        gap = std::min(gap, std::abs(re));
        if (re < -tol) ++n_neg;
        if (re > tol) ++n_pos;
        if (re < 0.0) {
            sum += re;
            cl = std::max(cl, re);
        }
    }
    out.gap = gap;
    out.stable_sum = sum;
    out.closed_loop_margin = cl;
    out.dichotomy = n_neg == n && n_pos == n && sch.n_selected == n;
    if (!out.dichotomy) return out;

    const MatrixXcd u1 = sch.u.topLeftCorner(n, n);
    const MatrixXcd u2 = sch.u.bottomLeftCorner(n, n);
    Eigen::JacobiSVD<MatrixXcd> svd(u1);
    const auto& sv = svd.singularValues();
    if (!(sv(n - 1) > 0.0) || sv(0) / sv(n - 1) > opt.max_basis_cond) {
        out.failure = DomainBoundary::Reason::singular_basis;
        return out;
    }
    const MatrixXcd sc = u2 * u1.inverse();
    MatrixXd sigma = linalg::symmetrize(sc.real());
    const double res_tol = opt.residual_tol * std::max(1.0, p.d_scale);
    double res = riccati_residual(p, sigma);
    for (int k = 0; k < opt.polish_steps && res > 0.0; ++k) {
        MatrixXd trial = sigma;
        if (!riccati_newton_step(p, trial)) break;
        const double r2 = riccati_residual(p, trial);
        if (!(r2 < res)) break;
        sigma = trial;
        res = r2;
    }
    if (!(res < res_tol)) {
        out.failure = DomainBoundary::Reason::residual;
        return out;
    }
    const double margin = linalg::max_real_eigenvalue(at + sigma * fp);
    if (!(margin < 0.0)) {
        out.failure = DomainBoundary::Reason::certificate;
        return out;
    }
    out.covariance = BiasedCovariance{sigma, margin, s, res};
    return out;
}

inline RiccatiAnalysis analyze_riccati(const MatrixXd& a, const MatrixXd& d, const MatrixXd& fp,
                                       const MatrixXd& fm, double s, const RiccatiOptions& opt = {}) {
    return analyze_riccati(riccati_data(a, d, fp, fm), s, opt);
}

inline RiccatiAnalysis analyze_riccati(const PhaseSpaceSystem& sys, const BiasMatrices& b,
                                       const RiccatiOptions& opt = {}) {
    return analyze_riccati(riccati_data(sys, b), b.s, opt);
}

// Stabilizing solution via the ordered Schur basis of the Hamiltonian matrix.
inline BiasedCovariance solve_riccati_stationary(const MatrixXd& a, const MatrixXd& d, const MatrixXd& fp,
                                                 const MatrixXd& fm, double s = 0.0,
                                                 const RiccatiOptions& opt = {}) {
    RiccatiAnalysis an = analyze_riccati(a, d, fp, fm, s, opt);
    if (!an.dichotomy)
        throw DomainBoundary(s, DomainBoundary::Reason::dichotomy,
                             "no stabilizing Riccati solution at s = " + std::to_string(s) +
                                 " (eigenvalues on the imaginary axis)");
    if (!an.covariance)
        throw DomainBoundary(s, an.failure, "stabilizing subspace is not a graph at s = " + std::to_string(s));
    return *an.covariance;
}

// Newton-Kleinman iteration from a stabilizing seed.
inline BiasedCovariance solve_riccati_newton(const RiccatiData& p, const MatrixXd& seed, double s = 0.0,
                                             int max_iter = 50, const RiccatiOptions& opt = {}) {
    const double res_tol = opt.residual_tol * std::max(1.0, p.d_scale);
    MatrixXd sigma = linalg::symmetrize(seed);
    double res = riccati_residual(p, sigma);
    for (int k = 0; k < max_iter && !(res < 1e-3 * res_tol); ++k) {
        if (!riccati_newton_step(p, sigma))
            throw ConvergenceError("Newton iteration hit a singular Lyapunov operator", res);
        res = riccati_residual(p, sigma);
        if (!std::isfinite(res)) throw ConvergenceError("Newton iteration diverged", res);
    }
    for (int k = 0; k < opt.polish_steps && res > 0.0; ++k) {
        MatrixXd trial = sigma;
        if (!riccati_newton_step(p, trial)) break;
        const double r2 = riccati_residual(p, trial);
        if (!(r2 < res)) break;
        sigma = trial;
        res = r2;
    }
    if (!(res < res_tol)) throw ConvergenceError("Newton iteration did not reach the residual target", res);
    const double margin = linalg::max_real_eigenvalue(p.at_d() + sigma * p.fp_d());
    if (!(margin < 0.0))
        throw DomainBoundary(s, DomainBoundary::Reason::certificate,
                             "Newton converged to a non-stabilizing root at s = " + std::to_string(s));
    return BiasedCovariance{sigma, margin, s, res};
}

inline BiasedCovariance solve_riccati_newton(const MatrixXd& a, const MatrixXd& d, const MatrixXd& fp,
                                             const MatrixXd& fm, const MatrixXd& seed, double s = 0.0,
                                             int max_iter = 50, const RiccatiOptions& opt = {}) {
    return solve_riccati_newton(riccati_data(a, d, fp, fm), seed, s, max_iter, opt);
}

struct CovariancePath {
    std::vector<double> times;
    std::vector<MatrixXd> sigma;
    bool diverged = false;
};

// Covariance flow S' = At S + S At^T + S Fp S + Q. S may blow up in finite time
// on the way to the stationary solution, so the flow is carried as S = Y X^-1
// with [X; Y]' = -H [X; Y], and re-based to X = I whenever X is well conditioned.
inline CovariancePath integrate_covariance(const PhaseSpaceSystem& sys, const BiasMatrices& b,
                                           const MatrixXd& sigma0, double t_max, double dt,
                                           int record_every = 0) {
    if (!(dt > 0.0)) throw ConfigError("integrate_covariance: dt must be positive");
    const RiccatiData p = riccati_data(sys, b);
    const MatrixXd at = p.at_d(), fp = p.fp_d(), q = p.q_d();
    const Eigen::Index n = at.rows();
    MatrixXd g(2 * n, 2 * n);
    g << -at.transpose(), -fp, q, at;

    CovariancePath path;
    MatrixXd z(2 * n, n);
    z << MatrixXd::Identity(n, n), linalg::symmetrize(sigma0);
    path.times.push_back(0.0);
    path.sigma.push_back(z.bottomRows(n));
    const long steps = static_cast<long>(std::ceil(t_max / dt));
    const double h = steps > 0 ? t_max / static_cast<double>(steps) : 0.0;
    for (long k = 1; k <= steps; ++k) {
        const MatrixXd k1 = g * z;
        const MatrixXd k2 = g * (z + 0.5 * h * k1);
        const MatrixXd k3 = g * (z + 0.5 * h * k2);
        const MatrixXd k4 = g * (z + h * k3);
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!z.allFinite()) {
            path.diverged = true;
            return path;
        }
        const MatrixXd x = z.topRows(n);
        Eigen::JacobiSVD<MatrixXd> svd(x);
        const auto& sv = svd.singularValues();
        const bool graph = sv(n - 1) > 1e-8 * sv(0);
        if (graph) {
            const MatrixXd sig = linalg::symmetrize(MatrixXd(z.bottomRows(n) * x.inverse()));
            z.topRows(n).setIdentity();
            z.bottomRows(n) = sig;
        } else {
            z /= linalg::max_abs(z);
        }
        if (graph && ((record_every > 0 && k % record_every == 0) || k == steps)) {
            path.times.push_back(static_cast<double>(k) * h);
            path.sigma.push_back(z.bottomRows(n));
        }
    }
    if (path.times.back() < t_max - 0.5 * h) path.diverged = true;
    return path;
}

struct FirstMomentPath {
    std::vector<double> times;
    std::vector<VectorXd> x;
    double time_average_quadratic = 0.0; // long-time mean of (1/2) x^T F+ x
    std::optional<VectorXd> fixed_point;
    bool converged = false;
};

struct FirstMomentOptions {
    double horizon = 0.0; // 0 selects the default
    int max_doublings = 8;
    double window_rtol = 1e-8;
    int steps_per_period = 400;
};

inline bool periodic_drive(const NetworkSpec& net, double& period) {
    period = 0.0;
    bool any = false;
    for (const auto& o : net.oscillators) {
        if (!o.drive || o.drive->kind != DriveSpec::Kind::sinusoidal || o.drive->amplitude == 0.0) continue;
        any = true;
        period = std::max(period, 2.0 * M_PI / o.drive->frequency);
    }
    return any;
}

// x' = (A - F- + S F+) x + d(t).
inline FirstMomentPath integrate_first_moment(const PhaseSpaceSystem& sys, const BiasMatrices& b,
                                              const BiasedCovariance& cov, const VectorXd& x0,
                                              const FirstMomentOptions& opt = {}) {
    const MatrixXd m = sys.drift - b.f_minus + cov.sigma * b.f_plus;
    const MatrixXd& fp = b.f_plus;
    const double margin = linalg::max_real_eigenvalue(m);
    if (!(margin < 0.0)) throw InstabilityError("first-moment closed loop is not stable");
    auto quad = [&](const VectorXd& x) { return 0.5 * x.dot(fp * x); };
    const double rate = std::max(linalg::max_abs(m), std::abs(margin));

    FirstMomentPath path;
    double period = 0.0;
    const bool periodic = periodic_drive(sys.network, period);

    auto rk4 = [&](VectorXd& x, double t, double h) {
        auto f = [&](double tt, const VectorXd& y) { return VectorXd(m * y + sys.drive(tt)); };
        const VectorXd k1 = f(t, x);
        const VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
        const VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
        const VectorXd k4 = f(t + h, x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    if (!periodic) {
        const VectorXd d = sys.drive(0.0);
        const VectorXd xf = -m.partialPivLu().solve(d);
        path.fixed_point = xf;
        path.time_average_quadratic = quad(xf);
        path.converged = true;
        const double horizon = opt.horizon > 0.0 ? opt.horizon : 20.0 / std::abs(margin);
        const long steps = std::max<long>(100, static_cast<long>(std::ceil(horizon * rate * 2.0)));
        const long keep = std::max<long>(1, steps / 200);
        const double h = horizon / static_cast<double>(steps);
        VectorXd x = x0;
        path.times.push_back(0.0);
        path.x.push_back(x);
        for (long k = 1; k <= steps; ++k) {
            rk4(x, static_cast<double>(k - 1) * h, h);
            if (k % keep == 0 || k == steps) {
                path.times.push_back(static_cast<double>(k) * h);
                path.x.push_back(x);
            }
        }
        return path;
    }

    int per = std::max(opt.steps_per_period, static_cast<int>(std::ceil(period * rate * 4.0)));
    per += per % 2;
    const double h = period / per;
    auto window_mean = [&](VectorXd& x, double& t) {
        // Simpson over one period.
        double acc = quad(x);
        for (int k = 1; k <= per; ++k) {
            rk4(x, t, h);
            t += h;
            acc += (k == per ? 1.0 : (k % 2 ? 4.0 : 2.0)) * quad(x);
        }
        return acc * h / 3.0 / period;
    };

    double horizon_periods = opt.horizon > 0.0 ? std::ceil(opt.horizon / period) : 50.0;
    VectorXd x = x0;
    double t = 0.0;
    long done = 0;
    double prev = std::numeric_limits<double>::quiet_NaN(), cur = prev;
    path.times.push_back(0.0);
    path.x.push_back(x);
    for (int dbl = 0; dbl <= opt.max_doublings; ++dbl) {
        while (done < static_cast<long>(horizon_periods)) {
            prev = cur;
            cur = window_mean(x, t);
            ++done;
            path.times.push_back(t);
            path.x.push_back(x);
        }
        if (std::isfinite(prev) && std::abs(cur - prev) <= opt.window_rtol * std::max(std::abs(cur), 1e-300)) {
            path.time_average_quadratic = cur;
            path.converged = true;
            return path;
        }
        if (std::abs(cur) < 1e-300 && std::abs(prev) < 1e-300) {
            path.time_average_quadratic = 0.0;
            path.converged = true;
            return path;
        }
        horizon_periods *= 2.0;
    }
    throw ConvergenceError("periodic window average did not settle within the horizon", cur);
}

} // namespace gaussldt
