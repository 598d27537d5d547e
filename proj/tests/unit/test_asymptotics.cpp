#include "bcs/asymptotics.hpp"
#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bcs;
using potentials::RadialPotential;

constexpr double kPi = std::numbers::pi;
constexpr double kGamma = std::numbers::egamma;

TEST_CASE("constants") {
    CHECK(asymptotics::kTcPrefactor == doctest::Approx(8 * std::exp(kGamma - 2) / kPi).epsilon(1e-15));
    CHECK(asymptotics::kXiPrefactor == doctest::Approx(8 / std::exp(2.0)).epsilon(1e-15));
    CHECK(asymptotics::kUniversalRatio == doctest::Approx(kPi / std::exp(kGamma)).epsilon(1e-15));
    CHECK(asymptotics::kDriftTcLimit == doctest::Approx(2 - kGamma - std::log(8 / kPi)).epsilon(1e-15));
    CHECK(asymptotics::kDriftXiLimit == doctest::Approx(2 - std::log(8.0)).epsilon(1e-14));
    CHECK(asymptotics::kXiPrefactor / asymptotics::kTcPrefactor ==
          doctest::Approx(asymptotics::kUniversalRatio).epsilon(1e-14));
}

TEST_CASE("predictions from b") {
    const double mu = 2.0;
    const double b = -0.4;
    const double tc = asymptotics::predict_tc_from_b(mu, b);
    const double xi = asymptotics::predict_xi_from_b(mu, b);
    CHECK(std::log(mu / tc) + kPi / (2 * std::sqrt(mu) * b) ==
          doctest::Approx(asymptotics::kDriftTcLimit).epsilon(1e-13));
    CHECK(xi / tc == doctest::Approx(asymptotics::kUniversalRatio).epsilon(1e-13));
    CHECK_THROWS_AS(asymptotics::predict_tc_from_b(mu, 0.1), RegimeError);
    CHECK_THROWS_AS(asymptotics::predict_xi_from_b(mu, 0.0), RegimeError);
    const RadialPotential v = RadialPotential::gaussian(-5.0, 1.0);
    const double bm = fermi::bmu(v, 1.0, 0.3).b_mu;
    CHECK(asymptotics::predict_tc(v, 1.0, 0.3) == asymptotics::predict_tc_from_b(1.0, bm));
}

TEST_CASE("limit extraction") {
    const std::vector<std::pair<double, double>> exact = {{0.1, 1.2}, {0.2, 1.4}, {0.4, 1.8}};
    const asymptotics::LimitFit f = asymptotics::extract_limit(exact);
    CHECK(f.limit == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(f.residual <= 1e-13);
    CHECK(f.points == 3);
    const std::vector<std::pair<double, double>> two = {{0.1, 1.0}, {0.2, 2.0}};
    CHECK_THROWS_AS(asymptotics::extract_limit(two), ParameterError);
    const std::vector<std::pair<double, double>> repeated = {{0.1, 1.0}, {0.1, 2.0}, {0.2, 3.0}};
    CHECK_THROWS_AS(asymptotics::extract_limit(repeated), ParameterError);
}

TEST_CASE("default ladder") {
    const RadialPotential v = RadialPotential::gaussian(-5.0, 1.0);
    const double e = fermi::emu(v, 1.0).e_min;
    const std::vector<double> l = asymptotics::default_ladder(e);
    REQUIRE(l.size() == 5);
    for (std::size_t k = 1; k < l.size(); ++k) CHECK(l[k] < l[k - 1]);
    CHECK(1.0 / (l.back() * std::abs(e)) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("report refuses potentials outside the s-wave regime") {
    CHECK_THROWS_AS(asymptotics::asymptotic_report(RadialPotential::zero(), 1.0, {0.3, 0.2, 0.1}),
                    RegimeError);
}

TEST_CASE("single ladder entry") {
    const RadialPotential v = RadialPotential::gaussian(-5.0, 1.0);
    const double e = fermi::emu(v, 1.0).e_min;
    const double w = fermi::wmu_swave(v, 1.0);
    const asymptotics::LadderEntry en = asymptotics::ladder_entry(v, 1.0, 0.15, e, w);
    CHECK(en.tc_grid_converged);
    CHECK(en.gap_converged);
    CHECK(en.tc > 0.0);
    CHECK(en.xi > en.tc);
    CHECK(std::abs(en.drift_tc - asymptotics::kDriftTcLimit) < 0.2);
    CHECK(std::abs(en.ratio / asymptotics::kUniversalRatio - 1) < 0.1);
    CHECK(en.leading == doctest::Approx(0.15 * std::log(1.0 / en.tc)));
}
