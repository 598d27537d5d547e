#include "bcs/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bcs;
using potentials::RadialPotential;

TEST_CASE("jacobi eigen decomposition") {
    numerics::Matrix m(3, 3);
    m << 2, 1, 0, 1, 2, 1, 0, 1, 2;
    const oracle::JacobiResult r = oracle::jacobi_eigen(m);
    CHECK(r.eigenvalues[0] == doctest::Approx(2 - std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.eigenvalues[2] == doctest::Approx(2 + std::sqrt(2.0)).epsilon(1e-14));
    const numerics::Matrix recon =
        r.eigenvectors * Eigen::VectorXd::Map(r.eigenvalues.data(), 3).asDiagonal() *
        r.eigenvectors.transpose();
    CHECK((recon - m).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("adaptive integral") {
    CHECK(oracle::adaptive_integral([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          doctest::Approx(std::exp(1.0) - 1).epsilon(1e-13));
    CHECK(oracle::adaptive_integral([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, {0.3}) ==
          doctest::Approx(0.045 + 0.245).epsilon(1e-13));
}

TEST_CASE("sphere quadrature reproduces the channel structure") {
    const auto ch = oracle::sphere_channel_eigenvalues(RadialPotential::gaussian(-5.0, 1.0), 1.0, 2);
    REQUIRE(ch.size() == 3);
    for (const auto& c : ch) CHECK(c.overlap > 0.99);
    CHECK(ch[0].e < ch[1].e);
}

TEST_CASE("bipolar Coulomb of a gaussian") {
    // int int e^{-x^2} e^{-y^2} / |x-y| = sqrt(2) pi^{5/2}
    const double ref = std::sqrt(2.0) * std::pow(std::numbers::pi, 2.5);
    CHECK(oracle::bipolar_coulomb(RadialPotential::gaussian(1.0, 1.0)) ==
          doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("sweep crossing") {
    const auto b = oracle::sweep_crossing([](double t) { return std::log(t / 0.01); }, 1e-4, 1.0, 41);
    CHECK(b.first <= 0.01);
    CHECK(b.second >= 0.01);
}
