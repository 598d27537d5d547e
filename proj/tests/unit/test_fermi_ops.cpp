#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"
#include "bcs/numerics.hpp"
#include "bcs/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bcs;
using potentials::RadialPotential;

constexpr double kPi = std::numbers::pi;

namespace {

RadialPotential gauss() { return RadialPotential::gaussian(-5.0, 1.0); }

std::vector<double> constant_gap(const numerics::QuadratureGrid& g, double d) {
    return std::vector<double>(g.size(), d);
}

}  // namespace

TEST_CASE("zero potential gives a zero spectrum") {
    const fermi::ChannelSpectrum s = fermi::emu(RadialPotential::zero(), 1.0, 4);
    REQUIRE(s.entries.size() == 5);
    for (const auto& e : s.entries) CHECK(e.e == 0.0);
    CHECK(s.argmin_l == 0);
    CHECK(fermi::wmu_swave(RadialPotential::zero(), 1.0) == 0.0);
    CHECK(fermi::born_a0(RadialPotential::zero(), 0.7) == 0.0);
}

TEST_CASE("channel eigenvalues: sign, bound, decay and truncation") {
    const RadialPotential v = gauss();
    const double mu = 1.0;
    const fermi::ChannelSpectrum s = fermi::emu(v, mu, 8);
    CHECK(s.entries.front().e < 0.0);
    CHECK(s.argmin_l == 0);
    CHECK(s.truncation_stable);
    const double bound = std::sqrt(mu / (2 * kPi)) *
                         oracle::adaptive_integral(
                             [&](double t) { return std::abs(v.fourier(std::sqrt(2 * mu * (1 - t)))); },
                             -1.0, 1.0);
    for (std::size_t l = 0; l < s.entries.size(); ++l) {
        CHECK(std::abs(s.entries[l].e) <= bound * (1 + 1e-12));
        if (l > 0) {
            CHECK(std::abs(s.entries[l].e) < std::abs(s.entries[l - 1].e));
        }
    }
    const fermi::ChannelSpectrum wide = fermi::emu(v, mu, 16);
    CHECK(std::abs(wide.e_min - s.e_min) <= 1e-12);
}

TEST_CASE("channel eigenvalue matches an adaptive Legendre integral") {
    const RadialPotential v = RadialPotential::exponential(-3.0, 0.8);
    const double mu = 1.7;
    for (int l = 0; l <= 4; ++l) {
        const double ref = std::sqrt(mu / (2 * kPi)) *
                           oracle::adaptive_integral(
                               [&](double t) {
                                   return v.fourier(std::sqrt(2 * mu * (1 - t))) *
                                          numerics::legendre_p(l, t);
                               },
                               -1.0, 1.0, {}, 1e-13);
        CHECK(std::abs(fermi::vmu_channel_eigenvalue(v, mu, l) - ref) <= 1e-11);
    }
}

TEST_CASE("small mu selects the constant eigenfunction") {
    const fermi::ChannelSpectrum s = fermi::emu(RadialPotential::square_well(-2.0, 1.5), 0.01);
    CHECK(s.argmin_l == 0);
}

TEST_CASE("W form: oracle, window and cutoff stability") {
    const RadialPotential v = gauss();
    const fermi::WmuResult w = fermi::wmu_swave_detail(v, 1.0);
    CHECK(std::abs(w.value - w.previous) <= 1e-8 * std::abs(w.value));
    fermi::WmuOptions doubled;
    doubled.cutoff = 2.0 * w.cutoff;
    CHECK(std::abs(fermi::wmu_swave(v, 1.0, doubled) - w.value) <= 1e-8 * std::abs(w.value));
    const double ref = oracle::extrapolated_wbar(v, 1.0);
    CHECK(std::abs(ref / w.value - 1.0) <= 1e-4);
}

TEST_CASE("b_mu structure") {
    const RadialPotential v = gauss();
    const double mu = 1.0;
    const fermi::BmuReport r = fermi::bmu(v, mu, 0.3);
    CHECK(r.b_mu == 0.3 * kPi / 2 * r.e_mu - 0.09 * kPi / 2 * r.w_bar);
    CHECK(r.b_mu < 0.0);
    CHECK(r.a0 == doctest::Approx(fermi::born_a0(v, 0.3)));
    // slope at lambda -> 0
    const double eps = 1e-6;
    CHECK(fermi::bmu_value(mu, eps, r.e_mu, r.w_bar) / eps ==
          doctest::Approx(kPi * r.e_mu / 2).epsilon(1e-5));
    if (std::isfinite(r.lambda_threshold)) {
        CHECK(fermi::bmu(v, mu, 0.5 * r.lambda_threshold).b_mu < 0.0);
    }
}

TEST_CASE("b_mu cross-check at doubled resolution") {
    const RadialPotential v = gauss();
    const double mu = 1.0;
    const double lambda = 0.3;
    const fermi::BmuReport r = fermi::bmu(v, mu, lambda);
    const double e_ref = std::sqrt(mu / (2 * kPi)) *
                         oracle::adaptive_integral(
                             [&](double t) { return v.fourier(std::sqrt(2 * mu * (1 - t))); },
                             -1.0, 1.0, {}, 1e-14);
    fermi::WmuOptions fine;
    fine.initial_window = 5e-3;
    fine.cutoff = 2.0 * fermi::wmu_swave_detail(v, mu).cutoff;
    const double w_ref = fermi::wmu_swave(v, mu, fine);
    const double b_ref = fermi::bmu_value(mu, lambda, e_ref, w_ref);
    CHECK(std::abs(r.b_mu - b_ref) <= 1e-8 * std::abs(b_ref));
}

TEST_CASE("b_mu refuses the non s-wave regime") {
    // strongly oscillating transform at large mu moves the minimum off l = 0
    const RadialPotential ring = RadialPotential::parse(
        "mix:[gaussian:amp=-5,range=1;gaussian:amp=6,range=0.6]");
    bool found = false;
    for (double mu : {4.0, 9.0, 16.0, 25.0}) {
        if (fermi::emu(ring, mu).argmin_l != 0) {
            CHECK_THROWS_AS(fermi::bmu(ring, mu, 0.3), RegimeError);
            found = true;
            break;
        }
    }
    CHECK(found);
}

TEST_CASE("second Born term against bipolar quadrature") {
    for (const RadialPotential& v :
         {gauss(), RadialPotential::exponential(-3.0, 0.8), RadialPotential::square_well(-2.0, 1.5)}) {
        const double c = fermi::coulomb_self_energy(v);
        CHECK(std::abs(c / oracle::bipolar_coulomb(v) - 1.0) <= 1e-6);
    }
    const RadialPotential v = gauss();
    const double lin = -5.0 * std::pow(kPi, 1.5) / (4 * kPi);
    CHECK(fermi::born_a0(v, 1e-5) / 1e-5 == doctest::Approx(lin).epsilon(1e-4));
}

TEST_CASE("m_mu: clamping, asymptotics, monotonicity") {
    CHECK(fermi::mmu(1.0, 10.0) == 0.0);
    CHECK(fermi::mmu(1.0, 30.0) == 0.0);
    const double target = std::numbers::egamma - 2.0 + std::log(8.0 / kPi);
    CHECK(std::abs(fermi::mmu(1.0, 1e-6) - std::log(1e6) - target) <= 1e-3);
    double prev = std::numeric_limits<double>::infinity();
    for (double t : {1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 3.0}) {
        const double m = fermi::mmu(1.0, t);
        CHECK(m >= 0.0);
        CHECK(m <= prev);
        prev = m;
    }
    // scaling mu -> s mu, T -> s T multiplies m by 1 / sqrt(s)
    CHECK(fermi::mmu(4.0, 4e-3) == doctest::Approx(fermi::mmu(1.0, 1e-3) / 2.0).epsilon(1e-8));
}

TEST_CASE("m~_mu of a constant gap") {
    const double mu = 1.0;
    const double d0 = 1e-6;
    const numerics::QuadratureGrid g = numerics::build_fermi_grid(mu, 50.0, 200, 240, 1e-8);
    const double m = fermi::mtilde(g, constant_gap(g, d0));
    CHECK(std::abs(std::sqrt(mu) * m - std::log(mu / d0) - (std::log(8.0) - 2.0)) <= 1e-3);
    const numerics::QuadratureGrid h = numerics::build_fermi_grid(mu, 50.0, 200, 240, 1e-2);
    CHECK(fermi::mtilde(h, constant_gap(h, 10.0)) == 0.0);
    CHECK_THROWS_AS(fermi::mtilde(h, constant_gap(h, 0.0)), RegimeError);
}

TEST_CASE("m~_mu scaling") {
    const double s = 4.0;
    const numerics::QuadratureGrid a = numerics::build_fermi_grid(1.0, 40.0, 200, 240, 1e-5);
    const numerics::QuadratureGrid b = numerics::build_fermi_grid(s, 80.0, 200, 240, 1e-5);
    const double ma = fermi::mtilde(a, constant_gap(a, 1e-3));
    const double mb = fermi::mtilde(b, constant_gap(b, s * 1e-3));
    CHECK(mb == doctest::Approx(ma / std::sqrt(s)).epsilon(1e-6));
}
