#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <utility>

#include "model.hpp"

namespace gaussldt {

using Eigen::Matrix2d;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Quadrature ordering (p_1, q_1, ..., p_N, q_N) with x = a + a^dagger,
// y = i(a - a^dagger); the vacuum has unit variance.
struct PhaseSpaceSystem {
    int n = 0;
    MatrixXd drift;
    MatrixXd noise;
    NetworkSpec network;

    int dim() const { return 2 * n; }
    bool driven() const { return network.driven(); }
    VectorXd drive(double t) const;
};

struct BiasMatrices {
    MatrixXd f_plus;
    MatrixXd f_minus;
    double s = 0.0;
    double fp = 0.0;
    double fm = 0.0;
    long double fp_ext = 0.0L;
    long double fm_ext = 0.0L;
    int oscillator = 0;
};

inline Matrix2d coupling_block(CouplingKind kind, double g) {
    Matrix2d b;
    switch (kind) {
    case CouplingKind::xx: b << 0.0, 0.0, 2.0 * g, 0.0; return b;
    case CouplingKind::rw: b << 0.0, -g, g, 0.0; return b;
    case CouplingKind::opo: b << 0.0, g, g, 0.0; return b;
    }
    throw ConfigError("unknown coupling kind");
}

inline MatrixXd assemble_drift(const NetworkSpec& net) {
    const auto rep = validate(net);
    if (!rep.ok()) require_valid(net);
    const int n = net.size();
    MatrixXd a = MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        const auto& o = net.oscillators[static_cast<std::size_t>(i)];
        const auto& r = rep.aggregate[static_cast<std::size_t>(i)];
        const double damp = -r.gamma_down + r.gamma_up;
        const double re = o.upsilon.real(), im = o.upsilon.imag();
        a(2 * i, 2 * i) = -2.0 * im + damp;
        a(2 * i, 2 * i + 1) = -o.omega + 2.0 * re;
        a(2 * i + 1, 2 * i) = o.omega + 2.0 * re;
        a(2 * i + 1, 2 * i + 1) = 2.0 * im + damp;
    }
    for (const auto& c : net.couplings) {
        const Matrix2d g = coupling_block(c.kind, c.g);
        a.block<2, 2>(2 * c.i, 2 * c.j) += g;
        a.block<2, 2>(2 * c.j, 2 * c.i) += g;
    }
    return a;
}

inline MatrixXd assemble_noise(const NetworkSpec& net) {
    const auto rep = validate(net);
    if (!rep.ok()) require_valid(net);
    const int n = net.size();
    MatrixXd d = MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        const auto& r = rep.aggregate[static_cast<std::size_t>(i)];
        const double base = -r.gamma_down - r.gamma_up;
        d(2 * i, 2 * i) = base + 2.0 * r.lambda.real();
        d(2 * i, 2 * i + 1) = -2.0 * r.lambda.imag();
        d(2 * i + 1, 2 * i) = -2.0 * r.lambda.imag();
        d(2 * i + 1, 2 * i + 1) = base - 2.0 * r.lambda.real();
    }
    return d;
}

inline VectorXd drive_vector(const NetworkSpec& net, double t) {
    const int n = net.size();
    VectorXd d = VectorXd::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
        const auto& o = net.oscillators[static_cast<std::size_t>(i)];
        if (o.drive) d(2 * i + 1) = o.omega * o.drive->value(t);
    }
    return d;
}

inline VectorXd PhaseSpaceSystem::drive(double t) const { return drive_vector(network, t); }

// f_+(s), f_-(s) from the bath's own rates.
inline std::pair<long double, long double> bias_functions_ext(const BathSpec& bath, double s) {
    const long double em = std::expm1(-static_cast<long double>(s)), ep = std::expm1(static_cast<long double>(s));
    const long double down = bath.gamma_down, up = bath.gamma_up;
    return {down * em + up * ep, down * em - up * ep};
}

inline std::pair<double, double> bias_functions(const BathSpec& bath, double s) {
    const auto [fp, fm] = bias_functions_ext(bath, s);
    return {static_cast<double>(fp), static_cast<double>(fm)};
}

inline BiasMatrices assemble_bias(const NetworkSpec& net, const CountingSpec& counting, double s) {
    const BathSpec& bath = resolve_bath(net, counting);
    const int n = net.size();
    BiasMatrices b;
    b.s = s;
    b.oscillator = bath.oscillator;
    std::tie(b.fp_ext, b.fm_ext) = bias_functions_ext(bath, s);
    b.fp = static_cast<double>(b.fp_ext);
    b.fm = static_cast<double>(b.fm_ext);
    b.f_plus = MatrixXd::Zero(2 * n, 2 * n);
    b.f_minus = MatrixXd::Zero(2 * n, 2 * n);
    const int k = 2 * bath.oscillator;
    b.f_plus(k, k) = b.f_plus(k + 1, k + 1) = b.fp;
    b.f_minus(k, k) = b.f_minus(k + 1, k + 1) = b.fm;
    return b;
}

// Largest real part of the spectrum; stable iff negative.
inline double stability_margin(const MatrixXd& a) {
    if (a.size() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<MatrixXd> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

inline PhaseSpaceSystem assemble(const NetworkSpec& net) {
    require_valid(net);
    PhaseSpaceSystem sys;
    sys.n = net.size();
    sys.drift = assemble_drift(net);
    sys.noise = assemble_noise(net);
    sys.network = net;
    return sys;
}

// Dense matrix-market "array" file.
inline void write_matrix_market(const std::filesystem::path& path, const MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << ' ' << m.cols() << '\n';
    out << std::setprecision(17);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) out << m(i, j) << '\n';
}

inline void dump_matrices(const std::filesystem::path& dir, const PhaseSpaceSystem& sys,
                          const BiasMatrices* bias = nullptr) {
    std::filesystem::create_directories(dir);
    write_matrix_market(dir / "A.mtx", sys.drift);
    write_matrix_market(dir / "D.mtx", sys.noise);
    write_matrix_market(dir / "d0.mtx", MatrixXd(sys.drive(0.0)));
    if (bias) {
        write_matrix_market(dir / "Fplus.mtx", bias->f_plus);
        write_matrix_market(dir / "Fminus.mtx", bias->f_minus);
    }
}

} // namespace gaussldt
