#include <gtest/gtest.h>

#include <gaussldt/model.hpp>

#include <cmath>

using namespace gaussldt;

namespace {

NetworkSpec one_oscillator() {
    NetworkSpec net;
    net.oscillators.push_back({});
    net.baths.push_back(thermal_bath(0, 0.1, 1.0, 1.0, "1"));
    return net;
}

} // namespace

TEST(ThermalRates, ZeroTemperature) {
    const Rates r = thermal_rates(0.1, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(r.gamma_down, 0.05);
    EXPECT_DOUBLE_EQ(r.gamma_up, 0.0);
}

TEST(ThermalRates, UnitTemperatureFrozen) {
    const Rates r = thermal_rates(0.1, 1.0, 1.0);
    EXPECT_NEAR(r.gamma_down, 0.07909883534346633, 1e-16);
    EXPECT_NEAR(r.gamma_up, 0.029098835343466325, 1e-16);
    EXPECT_NEAR(bose_occupation(1.0, 1.0), 1.0 / (std::exp(1.0) - 1.0), 1e-15);
}

TEST(ThermalRates, DifferenceStaysHalfGammaAtHighTemperature) {
    for (double t : {10.0, 1e3, 1e6}) {
        const Rates r = thermal_rates(0.1, t, 1.0);
        EXPECT_NEAR(r.gamma_down - r.gamma_up, 0.05, 1e-12 * r.gamma_down);
    }
}

TEST(ThermalRates, DetailedBalance) {
    const Rates r = thermal_rates(0.3, 0.7, 1.3);
    EXPECT_NEAR(std::log(r.gamma_down / r.gamma_up), 1.3 / 0.7, 1e-13);
}

TEST(ThermalRates, RejectsBadInput) {
    EXPECT_THROW(thermal_rates(0.0, 1.0, 1.0), ConfigError);
    EXPECT_THROW(thermal_rates(0.1, -1.0, 1.0), ConfigError);
    EXPECT_THROW(thermal_rates(0.1, 1.0, 0.0), ConfigError);
}

TEST(Validate, SingleBathAggregateEqualsRates) {
    const NetworkSpec net = one_oscillator();
    const auto rep = validate(net);
    ASSERT_TRUE(rep.ok());
    EXPECT_DOUBLE_EQ(rep.aggregate[0].gamma_down, net.baths[0].gamma_down);
    EXPECT_DOUBLE_EQ(rep.aggregate[0].gamma_up, net.baths[0].gamma_up);
}

TEST(Validate, TwoBathsAdd) {
    NetworkSpec net = one_oscillator();
    net.baths.push_back(thermal_bath(0, 0.1, 2.0, 1.0, "2"));
    const auto rep = validate(net);
    ASSERT_TRUE(rep.ok());
    EXPECT_DOUBLE_EQ(rep.aggregate[0].gamma_down, net.baths[0].gamma_down + net.baths[1].gamma_down);
    EXPECT_DOUBLE_EQ(rep.aggregate[0].gamma_up, net.baths[0].gamma_up + net.baths[1].gamma_up);
}

TEST(Validate, Violations) {
    NetworkSpec net = one_oscillator();
    net.oscillators.push_back({});
    net.couplings.push_back({1, 1, CouplingKind::rw, 0.1});
    EXPECT_TRUE(validate(net).has("self-coupling"));

    net.couplings = {{0, 1, CouplingKind::rw, 0.1}, {1, 0, CouplingKind::rw, 0.2}};
    EXPECT_TRUE(validate(net).has("duplicate-coupling"));

    net.couplings = {{0, 3, CouplingKind::rw, 0.1}};
    EXPECT_TRUE(validate(net).has("index-out-of-range"));

    NetworkSpec empty;
    EXPECT_TRUE(validate(empty).has("empty-network"));

    NetworkSpec neg = one_oscillator();
    neg.baths[0].gamma_up = -0.1;
    EXPECT_TRUE(validate(neg).has("negative-rate"));

    NetworkSpec dup = one_oscillator();
    dup.baths.push_back(dup.baths[0]);
    EXPECT_TRUE(validate(dup).has("duplicate-label"));

    NetworkSpec freq = one_oscillator();
    freq.oscillators[0].omega = -1.0;
    EXPECT_TRUE(validate(freq).has("bad-frequency"));
}

TEST(Validate, UndampedOscillatorIsOnlyAWarning) {
    NetworkSpec net = one_oscillator();
    net.oscillators.push_back({});
    net.couplings.push_back({0, 1, CouplingKind::rw, 0.1});
    const auto rep = validate(net);
    EXPECT_TRUE(rep.ok());
    EXPECT_TRUE(rep.has("undamped-oscillator"));
}

TEST(Validate, RequireValidThrows) {
    NetworkSpec net = one_oscillator();
    net.couplings.push_back({0, 0, CouplingKind::xx, 1.0});
    EXPECT_THROW(require_valid(net), ConfigError);
}

TEST(Counting, UnknownBath) {
    const NetworkSpec net = one_oscillator();
    EXPECT_THROW(resolve_bath(net, {"nope"}), ConfigError);
    EXPECT_EQ(resolve_bath(net, {"1"}).oscillator, 0);
}

TEST(RelativeXX, ShiftsBothOscillators) {
    NetworkSpec net;
    net.oscillators.resize(2);
    add_relative_xx(net, 0, 1, 0.4);
    for (const auto& o : net.oscillators) {
        EXPECT_DOUBLE_EQ(o.omega, 1.4);
        EXPECT_DOUBLE_EQ(o.upsilon.real(), 0.2);
    }
    ASSERT_EQ(net.couplings.size(), 1u);
    EXPECT_EQ(net.couplings[0].kind, CouplingKind::xx);
    EXPECT_DOUBLE_EQ(net.couplings[0].g, -0.4);
}

TEST(Drive, Values) {
    DriveSpec c{DriveSpec::Kind::constant, 0.3, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(c.value(12.0), 0.3);
    DriveSpec s{DriveSpec::Kind::sinusoidal, 2.0, 1.5, 0.25};
    EXPECT_DOUBLE_EQ(s.value(0.5), 2.0 * std::sin(1.0));
}
