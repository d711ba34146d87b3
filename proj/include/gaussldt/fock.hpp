#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "phasespace.hpp"

namespace gaussldt::fock {

using SpMat = Eigen::SparseMatrix<cplx>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

struct Limits {
    int max_modes = 2;
    std::size_t max_bytes = std::size_t{2} << 30;
    int dense_max = 400;        // Liouville dimension handled by a dense eigensolver
};

// Biased generator on ((n_max+1)^N)^2 column-stacked density matrices.
struct TruncatedGenerator {
    int n_max = 0;
    int modes = 0;
    Eigen::Index hilbert_dim = 0;
    Eigen::Index dim = 0;
    double s = 0.0;
    SpMat generator;
};

// Terms that do not conserve the excitation number make the sparse LU fill
// in almost densely.
inline bool number_mixing(const NetworkSpec& net) {
    for (const auto& c : net.couplings)
        if (c.kind == CouplingKind::xx) return true;
    for (const auto& o : net.oscillators)
        if (o.upsilon != cplx{}) return true;
    for (const auto& b : net.baths)
        if (b.lambda != cplx{}) return true;
    return false;
}

// Rough storage estimate for the generator and its LU factors.
inline std::size_t estimated_bytes(const NetworkSpec& net, int n_max) {
    const double h = std::pow(n_max + 1.0, net.size());
    const double d = h * h;
    double lu = 0.0;
    if (net.size() <= 1) lu = 16.0 * d * (4.0 * h + 32.0);
    else if (number_mixing(net)) lu = 5.0 * d * d;
    else lu = 0.1 * d * d;
    return static_cast<std::size_t>(std::min(lu + 16.0 * d * 40.0, 1e18));
}

inline void check_supported(const NetworkSpec& net, int n_max, const Limits& lim = {}) {
    if (net.size() > lim.max_modes)
        throw ResourceRefusal("Fock oracle limited to " + std::to_string(lim.max_modes) + " oscillators, got " +
                                  std::to_string(net.size()),
                              estimated_bytes(net, n_max));
    if (net.driven()) throw ConfigError("Fock oracle does not support drives");
    if (n_max < 2) throw ConfigError("Fock oracle needs n_max >= 2");
    const std::size_t need = estimated_bytes(net, n_max);
    if (need > lim.max_bytes)
        throw ResourceRefusal("Fock oracle truncation n_max = " + std::to_string(n_max) + " needs about " +
                                  std::to_string(need >> 20) + " MiB (limit " + std::to_string(lim.max_bytes >> 20) +
                                  " MiB)",
                              need);
}

namespace detail {

inline SpMat identity(Eigen::Index n) {
    SpMat m(n, n);
    m.setIdentity();
    return m;
}

inline SpMat annihilation(int n_max) {
    SpMat a(n_max + 1, n_max + 1);
    std::vector<Eigen::Triplet<cplx>> t;
    for (int k = 1; k <= n_max; ++k) t.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

inline SpMat kron(const SpMat& x, const SpMat& y) {
    SpMat out = Eigen::kroneckerProduct(x, y);
    return out;
}

// Operator acting on mode i of an N-mode register (mode 0 is the leftmost factor).
inline SpMat embed(const SpMat& op, int i, int modes, int n_max) {
    const SpMat id = identity(n_max + 1);
    SpMat out = (i == 0) ? op : id;
    for (int k = 1; k < modes; ++k) out = kron(out, k == i ? op : id);
    return out;
}

inline SpMat adjoint(const SpMat& m) { return SpMat(m.adjoint()); }

// vec(A rho B) = (B^T kron A) vec(rho).
inline SpMat sandwich(const SpMat& a, const SpMat& b) { return kron(SpMat(b.transpose()), a); }

} // namespace detail

inline TruncatedGenerator build_biased_generator(const NetworkSpec& net, const CountingSpec& counting, double s,
                                                 int n_max, const Limits& lim = {}) {
    require_valid(net);
    check_supported(net, n_max, lim);
    using namespace detail;
    const int modes = net.size();
    const BathSpec& ref = resolve_bath(net, counting);

    std::vector<SpMat> a(static_cast<std::size_t>(modes)), ad(a.size());
    const SpMat a1 = annihilation(n_max);
    for (int i = 0; i < modes; ++i) {
        a[static_cast<std::size_t>(i)] = embed(a1, i, modes, n_max);
        ad[static_cast<std::size_t>(i)] = adjoint(a[static_cast<std::size_t>(i)]);
    }
    const Eigen::Index h = a[0].rows();
    const SpMat id = identity(h);

    SpMat ham(h, h);
    for (int i = 0; i < modes; ++i) {
        const auto& o = net.oscillators[static_cast<std::size_t>(i)];
        const auto& ai = a[static_cast<std::size_t>(i)];
        const auto& adi = ad[static_cast<std::size_t>(i)];
        ham += cplx(o.omega) * SpMat(adi * ai);
        if (o.upsilon != cplx{}) ham += o.upsilon * SpMat(ai * ai) + std::conj(o.upsilon) * SpMat(adi * adi);
    }
    for (const auto& c : net.couplings) {
        const auto &ai = a[static_cast<std::size_t>(c.i)], &aj = a[static_cast<std::size_t>(c.j)];
        const auto &adi = ad[static_cast<std::size_t>(c.i)], &adj = ad[static_cast<std::size_t>(c.j)];
        switch (c.kind) {
        case CouplingKind::xx: ham += cplx(c.g) * SpMat(SpMat(ai + adi) * SpMat(aj + adj)); break;
        case CouplingKind::rw: ham += cplx(c.g) * SpMat(ai * adj + adi * aj); break;
        case CouplingKind::opo: ham += cplx(c.g) * SpMat(adi * adj + ai * aj); break;
        }
    }

    const cplx mi(0.0, -1.0);
    SpMat w = mi * (sandwich(ham, id) - sandwich(id, ham));

    auto dissipator = [&](const SpMat& j, const SpMat& k, cplx rate) {
        // rate (2 J rho K - K J rho - rho K J)
        const SpMat kj = k * j;
        return SpMat(rate * (2.0 * sandwich(j, k) - sandwich(kj, id) - sandwich(id, kj)));
    };
    for (const auto& b : net.baths) {
        const auto& ai = a[static_cast<std::size_t>(b.oscillator)];
        const auto& adi = ad[static_cast<std::size_t>(b.oscillator)];
        if (b.gamma_down != 0.0) w += dissipator(ai, adi, b.gamma_down);
        if (b.gamma_up != 0.0) w += dissipator(adi, ai, b.gamma_up);
        if (b.lambda != cplx{}) {
            w += dissipator(ai, ai, std::conj(b.lambda));
            w += dissipator(adi, adi, b.lambda);
        }
    }
    const auto& ar = a[static_cast<std::size_t>(ref.oscillator)];
    const auto& adr = ad[static_cast<std::size_t>(ref.oscillator)];
    if (s != 0.0) {
        w += cplx(2.0 * ref.gamma_down * std::expm1(-s)) * sandwich(ar, adr);
        w += cplx(2.0 * ref.gamma_up * std::expm1(s)) * sandwich(adr, ar);
    }
    w.prune(cplx(0.0));
    w.makeCompressed();

    TruncatedGenerator g;
    g.n_max = n_max;
    g.modes = modes;
    g.hilbert_dim = h;
    g.dim = h * h;
    g.s = s;
    g.generator = std::move(w);
    return g;
}

struct LeadingEigen {
    double theta = 0.0;
    double imag = 0.0;
    double residual = 0.0;
    double gap = 0.0; // distance to the nearest other eigenvalue (dense path only)
    VectorXcd vector;
};

struct EigenOptions {
    std::optional<double> hint;
    std::optional<double> gap;
    double rtol = 1e-12;
    int max_iter = 500;
    Limits limits;
};

// Leading eigenvector must be a positive semidefinite matrix.
inline void certify_positive(const VectorXcd& v, Eigen::Index h, double value) {
    MatrixXcd rho = Eigen::Map<const MatrixXcd>(v.data(), h, h);
    const cplx tr = rho.trace();
    if (std::abs(tr) == 0.0) throw ConvergenceError("leading eigenvector has zero trace", value);
    rho /= tr;
    const double scale = rho.cwiseAbs().maxCoeff();
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-6 * scale) throw ConvergenceError("leading eigenvector is not Hermitian", value);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-6 * es.eigenvalues().cwiseAbs().maxCoeff())
        throw ConvergenceError("leading eigenvector is not positive semidefinite", value);
}

inline LeadingEigen leading_dense(const TruncatedGenerator& g) {
    const MatrixXcd w = MatrixXcd(g.generator);
    Eigen::ComplexEigenSolver<MatrixXcd> es(w, true);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", NAN);
    const auto& ev = es.eigenvalues();
    Eigen::Index k = 0;
    for (Eigen::Index i = 1; i < ev.size(); ++i)
        if (ev(i).real() > ev(k).real()) k = i;
    LeadingEigen out;
    out.theta = ev(k).real();
    out.imag = ev(k).imag();
    out.gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (i != k) out.gap = std::min(out.gap, std::abs(ev(i) - ev(k)));
    out.vector = es.eigenvectors().col(k).normalized();
    out.residual = (w * out.vector - ev(k) * out.vector).norm();
    return out;
}

// Shift-invert iteration with a real shift just above the leading eigenvalue.
inline LeadingEigen leading_sparse(const TruncatedGenerator& g, double hint, double gap, const EigenOptions& opt) {
    const double shift = hint + 0.25 * gap;
    SpMat m = g.generator;
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.coeffRef(i, i) -= shift;
    m.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) throw ConvergenceError("sparse LU factorisation failed", hint);

    const Eigen::Index h = g.hilbert_dim;
    VectorXcd x = VectorXcd::Zero(g.dim);
    for (Eigen::Index i = 0; i < h; ++i) x(i + h * i) = 1.0;
    x.normalize();
    double wnorm = 0.0;
    for (int k = 0; k < g.generator.outerSize(); ++k)
        for (SpMat::InnerIterator it(g.generator, k); it; ++it) wnorm = std::max(wnorm, std::abs(it.value()));
    LeadingEigen out;
    cplx lambda = hint;
    for (int it = 0; it < opt.max_iter; ++it) {
        x = lu.solve(x);
        x.normalize();
        const VectorXcd wx = g.generator * x;
        lambda = x.dot(wx);
        out.residual = (wx - lambda * x).norm();
        if (out.residual < opt.rtol * std::max(1.0, wnorm)) {
            out.theta = lambda.real();
            out.imag = lambda.imag();
            out.vector = x;
            out.gap = gap;
            return out;
        }
    }
    throw ConvergenceError("shift-invert iteration did not converge (residual " + std::to_string(out.residual) + ")",
                           lambda.real());
}

inline LeadingEigen leading_eigen(const TruncatedGenerator& g, const EigenOptions& opt = {}) {
    LeadingEigen out;
    if (g.dim <= opt.limits.dense_max) {
        out = leading_dense(g);
    } else {
        double hint = 0.0, gap = 0.0;
        if (opt.hint && opt.gap) {
            hint = *opt.hint;
            gap = *opt.gap;
        } else {
            throw ConvergenceError("sparse leading eigenvalue needs a hint and a gap estimate", NAN);
        }
        out = leading_sparse(g, hint, gap, opt);
    }
    if (std::abs(out.imag) > 1e-8 * std::max(1.0, std::abs(out.theta)))
        throw ConvergenceError("leading eigenvalue is not real", out.theta);
    certify_positive(out.vector, g.hilbert_dim, out.theta);
    return out;
}

inline double leading_theta(const TruncatedGenerator& g, const EigenOptions& opt = {}) {
    return leading_eigen(g, opt).theta;
}

struct Truncation {
    double theta = 0.0;
    int n_max = 0;
    std::vector<std::pair<int, double>> history;
};

inline int truncation_cap(int modes) { return modes <= 1 ? 128 : 14; }

// Coarse dense solve used to seed the sparse iteration.
inline LeadingEigen coarse_estimate(const NetworkSpec& net, const CountingSpec& counting, double s,
                                    const Limits& lim) {
    int n = 2;
    while (std::pow(n + 2.0, 2.0 * net.size()) <= lim.dense_max) ++n;
    return leading_dense(build_biased_generator(net, counting, s, n, lim));
}

// Doubles n_max from 8 (clipped to the cap) until successive estimates agree to
// tol; reports the smaller truncation of the agreeing pair.
inline Truncation auto_truncate(const NetworkSpec& net, const CountingSpec& counting, double s, double tol,
                                const Limits& lim = {}) {
    if (!(tol > 0.0)) throw ConfigError("auto_truncate: tol must be positive");
    check_supported(net, 2, lim);
    const int cap = truncation_cap(net.size());
    Truncation out;
    EigenOptions eo;
    eo.limits = lim;
    std::optional<double> prev;
    int prev_n = 0;
    for (int n = 8;; n = std::min(2 * n, cap)) {
        const TruncatedGenerator g = build_biased_generator(net, counting, s, n, lim);
        if (g.dim > lim.dense_max && !eo.gap) {
            const LeadingEigen c = coarse_estimate(net, counting, s, lim);
            eo.hint = c.theta;
            eo.gap = c.gap;
        }
        const LeadingEigen le = leading_eigen(g, eo);
        out.history.emplace_back(n, le.theta);
        if (le.gap > 0.0 && std::isfinite(le.gap)) eo.gap = le.gap;
        eo.hint = le.theta;
        if (prev && std::abs(le.theta - *prev) < tol) {
            out.theta = *prev;
            out.n_max = prev_n;
            return out;
        }
        prev = le.theta;
        prev_n = n;
        if (n >= cap)
            throw ConvergenceError("truncation did not converge up to n_max = " + std::to_string(cap), le.theta);
    }
}

} // namespace gaussldt::fock
