#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>

#include "errors.hpp"

namespace gaussldt::linalg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

inline double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Complex Schur form M = U T U^H with the eigenvalues selected by `first`
// moved to the leading diagonal positions.
struct OrderedSchur {
    MatrixXcd t;
    MatrixXcd u;
    int n_selected = 0;
};

// Swaps adjacent diagonal entries k, k+1 of an upper triangular T.
inline void swap_adjacent(MatrixXcd& t, MatrixXcd& u, Eigen::Index k) {
    const cplx a = t(k, k), b = t(k + 1, k + 1);
    const cplx x0 = t(k, k + 1), x1 = b - a;
    const double nrm = std::hypot(std::abs(x0), std::abs(x1));
    if (nrm == 0.0) return;
    const cplx c = x0 / nrm, sn = x1 / nrm;
    // G has first column (c, sn): the eigenvector of the 2x2 block for b.
    Eigen::Matrix2cd g;
    g << c, -std::conj(sn), sn, std::conj(c);
    t.middleRows(k, 2) = g.adjoint() * t.middleRows(k, 2);
    t.middleCols(k, 2) = t.middleCols(k, 2) * g;
    u.middleCols(k, 2) = u.middleCols(k, 2) * g;
    t(k + 1, k) = 0.0;
    t(k, k) = b;
    t(k + 1, k + 1) = a;
}

inline OrderedSchur ordered_schur(const MatrixXcd& m, const std::function<bool(cplx)>& first) {
    Eigen::ComplexSchur<MatrixXcd> cs(m);
    if (cs.info() != Eigen::Success) throw ConvergenceError("complex Schur decomposition failed", NAN);
    OrderedSchur out{cs.matrixT(), cs.matrixU(), 0};
    const Eigen::Index n = m.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        if (first(out.t(i, i))) ++out.n_selected;
    // Bubble the selected eigenvalues upwards.
    Eigen::Index placed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!first(out.t(i, i))) continue;
        for (Eigen::Index k = i; k > placed; --k) swap_adjacent(out.t, out.u, k - 1);
        ++placed;
    }
    return out;
}

// Bartels-Stewart for A X + X A^T = C with real A, C (complex Schur variant).
// Requires lambda_i + lambda_j != 0 for all eigenvalue pairs of A.
inline MatrixXd lyapunov(const MatrixXd& a, const MatrixXd& c) {
    const Eigen::Index n = a.rows();
    Eigen::ComplexSchur<MatrixXcd> cs(a.cast<cplx>());
    if (cs.info() != Eigen::Success) throw ConvergenceError("Schur decomposition failed in Lyapunov solve", NAN);
    const MatrixXcd& t = cs.matrixT();
    const MatrixXcd& u = cs.matrixU();
    MatrixXcd y = u.adjoint() * c.cast<cplx>() * u;
    const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        for (Eigen::Index j = n - 1; j >= 0; --j) {
            cplx rhs = y(i, j);
            for (Eigen::Index k = i + 1; k < n; ++k) rhs -= t(i, k) * y(k, j);
            for (Eigen::Index k = j + 1; k < n; ++k) rhs -= y(i, k) * std::conj(t(j, k));
            const cplx den = t(i, i) + std::conj(t(j, j));
            if (std::abs(den) <= 1e-14 * scale)
                throw InstabilityError("Lyapunov operator is singular (eigenvalues summing to zero)");
            y(i, j) = rhs / den;
        }
    }
    return (u * y * u.adjoint()).real();
}

inline double max_real_eigenvalue(const MatrixXd& a) {
    if (a.size() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<MatrixXd> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

// Symplectic spectrum of a covariance in the (p_1,q_1,...) ordering.
inline Eigen::VectorXd symplectic_eigenvalues(const MatrixXd& sigma) {
    const Eigen::Index m = sigma.rows();
    MatrixXd omega = MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i + 1 < m; i += 2) {
        omega(i, i + 1) = 1.0;
        omega(i + 1, i) = -1.0;
    }
    Eigen::EigenSolver<MatrixXd> es(omega * sigma, false);
    Eigen::VectorXd nu = es.eigenvalues().cwiseAbs();
    std::sort(nu.data(), nu.data() + nu.size());
    Eigen::VectorXd out(m / 2);
    for (Eigen::Index i = 0; i < m / 2; ++i) out(i) = nu(2 * i);
    return out;
}

} // namespace gaussldt::linalg
