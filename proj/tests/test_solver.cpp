#include <gtest/gtest.h>

#include <gaussldt/presets.hpp>
#include <gaussldt/solver.hpp>

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <random>

using namespace gaussldt;

namespace {

// Solves A X + X A^T = C through the Kronecker form.
MatrixXd brute_lyapunov(const MatrixXd& a, const MatrixXd& c) {
    const Eigen::Index n = a.rows();
    const MatrixXd id = MatrixXd::Identity(n, n);
    const MatrixXd k = Eigen::kroneckerProduct(id, a) + Eigen::kroneckerProduct(a, id);
    const VectorXd x = k.fullPivLu().solve(Eigen::Map<const VectorXd>(c.data(), n * n));
    return Eigen::Map<const MatrixXd>(x.data(), n, n);
}

NetworkSpec single(double gamma, double t) {
    NetworkSpec net;
    net.oscillators.push_back({});
    net.baths.push_back(thermal_bath(0, gamma, t, 1.0, "1"));
    return net;
}

MatrixXd random_stable(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
    const double shift = linalg::max_real_eigenvalue(a) + 0.5;
    return a - shift * MatrixXd::Identity(n, n);
}

} // namespace

TEST(Lyapunov, MatchesKroneckerSolve) {
    for (unsigned seed : {1u, 2u, 3u}) {
        const MatrixXd a = random_stable(6, seed);
        MatrixXd c = MatrixXd::Random(6, 6);
        c = c + c.transpose().eval();
        const MatrixXd x = linalg::lyapunov(a, c);
        EXPECT_LT(linalg::max_abs(x - brute_lyapunov(a, c)), 1e-10);
    }
}

TEST(Lyapunov, SingleThermalOscillator) {
    for (double t : {0.0, 0.5, 1.0, 5.0}) {
        const PhaseSpaceSystem sys = assemble(single(0.1, t));
        const MatrixXd s = solve_lyapunov(sys.drift, sys.noise);
        const double v = 2.0 * bose_occupation(t, 1.0) + 1.0;
        EXPECT_LT(linalg::max_abs(s - v * MatrixXd::Identity(2, 2)), 1e-12) << "T = " << t;
    }
}

TEST(Lyapunov, RwPairAtEqualTemperatures) {
    const PhaseSpaceSystem sys = assemble(presets::rw_chain(2, 0.1, 0.1, 1.5, 0.0).build());
    const MatrixXd s = solve_lyapunov(sys.drift, sys.noise);
    const double v = 2.0 * bose_occupation(1.5, 1.0) + 1.0;
    EXPECT_LT(linalg::max_abs(s - v * MatrixXd::Identity(4, 4)), 1e-12);
}

TEST(Lyapunov, UnstableDriftRejected) {
    const PhaseSpaceSystem sys = assemble(presets::opo_chain(3, 0.1, 0.1, 1.0).build());
    EXPECT_THROW(solve_lyapunov(sys.drift, sys.noise), InstabilityError);
}

TEST(OrderedSchur, SelectsStableBlockFirst) {
    const MatrixXd m = MatrixXd::Random(6, 6);
    const auto sch = linalg::ordered_schur(m.cast<cplx>(), [](cplx z) { return z.real() < 0.0; });
    int stable = 0;
    for (Eigen::Index i = 0; i < 6; ++i) stable += sch.t(i, i).real() < 0.0;
    EXPECT_EQ(sch.n_selected, stable);
    for (Eigen::Index i = 0; i < sch.n_selected; ++i) EXPECT_LT(sch.t(i, i).real(), 0.0);
    EXPECT_LT((sch.u * sch.t * sch.u.adjoint() - m.cast<cplx>()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Riccati, ZeroBiasReducesToLyapunov) {
    const PhaseSpaceSystem sys = assemble(presets::rw_chain(4, 0.1, 0.1, 1.0).build());
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, 0.0);
    const BiasedCovariance c = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus);
    EXPECT_LT(linalg::max_abs(c.sigma - solve_lyapunov(sys.drift, sys.noise)), 1e-12);
}

TEST(Riccati, VacuumForZeroTemperatureBath) {
    const PhaseSpaceSystem sys = assemble(single(0.1, 0.0));
    for (double s : {-2.0, -0.3, 0.4, 1.7, 5.0}) {
        const BiasMatrices b = assemble_bias(sys.network, {"1"}, s);
        const BiasedCovariance c = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus, s);
        EXPECT_LT(linalg::max_abs(c.sigma - MatrixXd::Identity(2, 2)), 1e-12) << "s = " << s;
        EXPECT_LT(c.closed_loop_margin, 0.0);
    }
}

TEST(Riccati, NewtonAgreesWithSchur) {
    const PhaseSpaceSystem sys = assemble(presets::rw_chain(4, 0.1, 0.1, 1.0).build());
    const MatrixXd seed = solve_lyapunov(sys.drift, sys.noise);
    for (double s : {-0.1, 0.2, 0.45}) {
        const BiasMatrices b = assemble_bias(sys.network, {"1"}, s);
        const auto schur = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus, s);
        const auto newton = solve_riccati_newton(sys.drift, sys.noise, b.f_plus, b.f_minus, seed, s);
        EXPECT_LT(linalg::max_abs(schur.sigma - newton.sigma), 1e-8) << "s = " << s;
        EXPECT_LT(schur.residual, 1e-10);
    }
}

TEST(Riccati, OutsideDomainThrows) {
    const PhaseSpaceSystem sys = assemble(presets::single_two_baths(0.1, 0.5, 1.5).build());
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, 3.0);
    EXPECT_THROW(solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus, 3.0), DomainBoundary);
    const RiccatiAnalysis an = analyze_riccati(sys, b);
    EXPECT_FALSE(an.dichotomy);
}

TEST(Riccati, ResidualHelpersAgree) {
    const PhaseSpaceSystem sys = assemble(presets::opo_chain(2, 0.1, 0.1, 1.0).build());
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, 0.4);
    const auto c = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus, 0.4);
    const MatrixXd at = sys.drift - b.f_minus, q = b.f_plus - 2.0 * sys.noise;
    const MatrixXd r = at * c.sigma + c.sigma * at.transpose() + c.sigma * b.f_plus * c.sigma + q;
    EXPECT_LT(linalg::max_abs(r), 1e-12);
    EXPECT_LT(riccati_residual(at, b.f_plus, q, c.sigma), 1e-12);
}

TEST(Covariance, PhysicalAtZeroBias) {
    for (const auto& cfg : {presets::rw_chain(4, 0.1, 0.1, 0.5), presets::opo_chain(2, 0.1, 0.1, 1.0),
                            presets::xx_pair(1.0, 0.1, 10.0)}) {
        const PhaseSpaceSystem sys = assemble(cfg.build());
        const VectorXd nu = linalg::symplectic_eigenvalues(solve_lyapunov(sys.drift, sys.noise));
        EXPECT_GE(nu.minCoeff(), 1.0 - 1e-10);
    }
}

TEST(Covariance, RelaxesToThermal) {
    const PhaseSpaceSystem sys = assemble(single(0.1, 1.0));
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, 0.0);
    const auto path = integrate_covariance(sys, b, MatrixXd::Identity(2, 2), 200.0, 0.01, 500);
    ASSERT_FALSE(path.diverged);
    const double target = 2.0 * bose_occupation(1.0, 1.0) + 1.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < path.sigma.size(); ++i) {
        const double v = path.sigma[i](0, 0);
        const double exact = target + (1.0 - target) * std::exp(-0.1 * path.times[i]);
        EXPECT_NEAR(v, exact, 1e-9);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Covariance, FixedPointStaysPut) {
    const PhaseSpaceSystem sys = assemble(presets::single_two_baths(0.1, 0.5, 1.5).build());
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, 0.7);
    const auto c = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus, 0.7);
    const auto path = integrate_covariance(sys, b, c.sigma, 50.0, 0.05);
    EXPECT_LT(linalg::max_abs(path.sigma.back() - c.sigma), 1e-12);
}

TEST(Covariance, ConvergesThroughBlowUp) {
    const PhaseSpaceSystem sys = assemble(presets::opo_chain(2, 0.1, 0.1, 1.0).build());
    const double s = 1.5;
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, s);
    const auto c = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus, s);
    const auto path = integrate_covariance(sys, b, solve_lyapunov(sys.drift, sys.noise), 800.0, 0.05);
    ASSERT_FALSE(path.diverged);
    EXPECT_LT(linalg::max_abs(path.sigma.back() - c.sigma), 1e-8);
}

TEST(Covariance, UnstableTripleDiverges) {
    const PhaseSpaceSystem sys = assemble(presets::opo_chain(3, 1.0, 0.1, 1.0).build());
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, 0.0);
    const auto path = integrate_covariance(sys, b, MatrixXd::Identity(6, 6), 1e3, 0.01);
    EXPECT_TRUE(path.diverged);
}

TEST(FirstMoment, NoDriveStaysAtZero) {
    const PhaseSpaceSystem sys = assemble(presets::single_two_baths(0.1, 0.5, 1.5).build());
    const BiasMatrices b = assemble_bias(sys.network, {"1"}, 0.5);
    const auto c = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus, 0.5);
    const auto path = integrate_first_moment(sys, b, c, VectorXd::Zero(2));
    EXPECT_EQ(path.time_average_quadratic, 0.0);
    EXPECT_EQ(path.x.back().norm(), 0.0);
}

TEST(FirstMoment, ConstantDriveFixedPoint) {
    NetworkSpec net = presets::single_two_baths(0.1, 0.5, 1.5).build();
    net.oscillators[0].drive = DriveSpec{DriveSpec::Kind::constant, 0.2, 0.0, 0.0};
    const PhaseSpaceSystem sys = assemble(net);
    const BiasMatrices b = assemble_bias(net, {"1"}, 0.0);
    const auto c = solve_riccati_stationary(sys.drift, sys.noise, b.f_plus, b.f_minus);
    const auto path = integrate_first_moment(sys, b, c, VectorXd::Zero(2));
    const VectorXd expect = -sys.drift.partialPivLu().solve(sys.drive(0.0));
    ASSERT_TRUE(path.fixed_point.has_value());
    EXPECT_LT((*path.fixed_point - expect).norm(), 1e-14);
    EXPECT_LT((path.x.back() - expect).norm(), 1e-8);
    EXPECT_EQ(path.time_average_quadratic, 0.0);
}
