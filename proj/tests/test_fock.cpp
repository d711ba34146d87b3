#include <gtest/gtest.h>

#include <gaussldt/fock.hpp>
#include <gaussldt/ldf.hpp>
#include <gaussldt/presets.hpp>

#include <cmath>

using namespace gaussldt;

namespace {

NetworkSpec single(double t) {
    NetworkSpec net;
    net.oscillators.push_back({});
    net.baths.push_back(thermal_bath(0, 0.1, t, 1.0, "1"));
    return net;
}

// vec(I)^T W, i.e. the trace of W applied to each basis matrix.
double trace_leak(const fock::TruncatedGenerator& g) {
    Eigen::VectorXcd vid = Eigen::VectorXcd::Zero(g.dim);
    for (Eigen::Index k = 0; k < g.hilbert_dim; ++k) vid(k * g.hilbert_dim + k) = 1.0;
    const Eigen::VectorXcd row = g.generator.adjoint() * vid;
    return row.cwiseAbs().maxCoeff();
}

} // namespace

TEST(Fock, UnbiasedGeneratorPreservesTrace) {
    const auto two = presets::single_two_baths(0.1, 0.5, 1.5);
    EXPECT_LT(trace_leak(fock::build_biased_generator(two.build(), {"1"}, 0.0, 12)), 1e-14);
    const auto xx = presets::xx_pair(1.0, 0.1, 1.0);
    EXPECT_LT(trace_leak(fock::build_biased_generator(xx.build(), {"1"}, 0.0, 5)), 1e-13);
    const auto opo = presets::opo_chain(2, 0.05, 0.1, 1.0);
    EXPECT_LT(trace_leak(fock::build_biased_generator(opo.build(), {"1"}, 0.0, 5)), 1e-13);
}

TEST(Fock, ZeroTemperatureLeadingEigenvalue) {
    for (double s : {-1.0, 0.5, 2.0}) {
        const auto g = fock::build_biased_generator(single(0.0), {"1"}, s, 10);
        EXPECT_NEAR(fock::leading_theta(g), 0.0, 1e-12) << "s = " << s;
    }
    const fock::Truncation t = fock::auto_truncate(single(0.0), {"1"}, 0.7, 1e-10);
    EXPECT_EQ(t.n_max, 8);
    EXPECT_NEAR(t.theta, 0.0, 1e-12);
}

TEST(Fock, MatchesGaussianSingleOscillator) {
    const auto cfg = presets::single_two_baths(0.1, 0.5, 1.5);
    ThetaEvaluator ev(cfg.build(), cfg.counting());
    for (double s : {-0.4, 0.6, 1.0}) {
        const fock::Truncation t = fock::auto_truncate(cfg.build(), cfg.counting(), s, 1e-8);
        EXPECT_NEAR(t.theta, ev(s), 1e-7) << "s = " << s;
    }
}

TEST(Fock, MatchesGaussianPairs) {
    const std::vector<config::ModelConfig> pairs = {presets::rw_chain(2, 0.1, 0.1, 0.2, 0.2),
                                                    presets::opo_chain(2, 0.05, 0.1, 0.2, 0.2),
                                                    presets::xx_pair(0.1, 0.1, 0.2, 0.2)};
    const int n_max[] = {10, 8, 7};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const NetworkSpec net = pairs[k].build();
        ThetaEvaluator ev(net, {"1"});
        const double s = 0.8;
        const fock::LeadingEigen coarse = fock::coarse_estimate(net, {"1"}, s, {});
        fock::EigenOptions eo;
        eo.hint = coarse.theta;
        eo.gap = coarse.gap;
        const auto g = fock::build_biased_generator(net, {"1"}, s, n_max[k]);
        EXPECT_NEAR(fock::leading_theta(g, eo), ev(s), 1e-8) << "pair " << k;
    }
}

TEST(Fock, Refusals) {
    EXPECT_THROW(fock::build_biased_generator(presets::rw_chain(3, 0.1, 0.1, 1.0).build(), {"1"}, 0.1, 4),
                 ResourceRefusal);
    NetworkSpec driven = single(1.0);
    driven.oscillators[0].drive = DriveSpec{DriveSpec::Kind::constant, 0.1, 0.0, 0.0};
    EXPECT_THROW(fock::build_biased_generator(driven, {"1"}, 0.1, 6), ConfigError);
    EXPECT_THROW(fock::build_biased_generator(single(1.0), {"1"}, 0.1, 1), ConfigError);
    const NetworkSpec xx = presets::xx_pair(1.0, 0.1, 10.0).build();
    EXPECT_THROW(fock::check_supported(xx, 14), ResourceRefusal);
    EXPECT_NO_THROW(fock::check_supported(presets::rw_chain(2, 0.1, 0.1, 1.0).build(), 14));
    EXPECT_THROW(fock::auto_truncate(single(1.0), {"1"}, 0.1, 0.0), ConfigError);
}

TEST(Fock, ResourceEstimateGrows) {
    const NetworkSpec rw = presets::rw_chain(2, 0.1, 0.1, 1.0).build();
    const NetworkSpec xx = presets::xx_pair(1.0, 0.1, 1.0).build();
    EXPECT_LT(fock::estimated_bytes(rw, 6), fock::estimated_bytes(rw, 10));
    EXPECT_LT(fock::estimated_bytes(rw, 10), fock::estimated_bytes(xx, 10));
    EXPECT_TRUE(fock::number_mixing(xx));
    EXPECT_FALSE(fock::number_mixing(rw));
}
