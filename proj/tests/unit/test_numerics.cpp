#include "bcs/errors.hpp"
#include "bcs/numerics.hpp"
#include "bcs/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace bcs;
using numerics::Matrix;

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
    const numerics::GaussRule& r = numerics::gauss_legendre(10);
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        s += r.weights[k] * std::pow(r.nodes[k], 18);
        CHECK(r.one_minus[k] == doctest::Approx(1.0 - r.nodes[k]).epsilon(1e-15));
    }
    CHECK(s == doctest::Approx(2.0 / 19.0).epsilon(1e-14));
}

TEST_CASE("legendre polynomials") {
    CHECK(numerics::legendre_p(0, 0.3) == 1.0);
    CHECK(numerics::legendre_p(2, 0.3) == doctest::Approx(0.5 * (3 * 0.09 - 1)));
    CHECK(numerics::legendre_p(3, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("fermi grid structure") {
    const numerics::QuadratureGrid g = numerics::build_fermi_grid(1.0, 10.0, 200, 200, 1e-10);
    REQUIRE(g.size() > 0);
    CHECK(g.nodes.front() > 0.0);
    CHECK(g.nodes.back() < 10.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g.nodes[i] > g.nodes[i - 1]);
    }
    CHECK(std::all_of(g.weights.begin(), g.weights.end(), [](double w) { return w > 0.0; }));
    const auto band = std::count_if(g.nodes.begin(), g.nodes.end(), [&](double p) {
        return std::abs(p - 1.0) <= g.inner_window;
    });
    CHECK(band >= 200);
    CHECK(g.nodes[g.fermi_index] == 1.0);
    CHECK(g.integrate([](double) { return 1.0; }) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(g.integrate([](double p) { return p * p; }) ==
          doctest::Approx(1000.0 / 3.0).epsilon(1e-10));
    // offsets and kinetic energies carry full precision at the Fermi surface
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g.kinetic[i] == doctest::Approx(g.offsets[i] * (g.nodes[i] + 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("fermi grid resolves a near-singular integrand") {
    const numerics::QuadratureGrid g = numerics::build_fermi_grid(1.0, 10.0, 200, 200, 1e-10);
    auto f = [](double p) { return 1.0 / (std::abs(p * p - 1.0) + 1e-6); };
    const double ref = oracle::adaptive_integral(
        f, 0.0, 10.0, {0.9, 1.0 - 1e-3, 1.0 - 1e-5, 1.0 - 1e-6, 1.0, 1.0 + 1e-6, 1.0 + 1e-5, 1.0 + 1e-3, 1.1},
        1e-10, 12);
    CHECK(g.integrate(f) == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("fermi grid rejects invalid bounds") {
    CHECK_THROWS_AS(numerics::build_fermi_grid(-1.0, 10.0, 200, 200, 1e-10), ParameterError);
    CHECK_THROWS_AS(numerics::build_fermi_grid(1.0, 1.5, 200, 200, 1e-10), ParameterError);
    CHECK_THROWS_AS(numerics::build_fermi_grid(1.0, 10.0, 200, 200, 0.5), ParameterError);
}

TEST_CASE("lowest eigenpair of small matrices") {
    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 3;
    d(1, 1) = 1;
    d(2, 2) = 2;
    const numerics::SpectralResult r = numerics::lowest_eigenpair(d);
    CHECK(r.eigenvalue == doctest::Approx(1.0));
    CHECK(std::abs(r.eigenvector[1]) == doctest::Approx(1.0));
    Matrix s(2, 2);
    s << 0, 1, 1, 0;
    CHECK(numerics::lowest_eigenvalue(s) == doctest::Approx(-1.0));
}

TEST_CASE("lowest eigenpair against Jacobi reference and shift invariance") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(50, 50);
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j <= i; ++j) {
            m(i, j) = m(j, i) = n(rng);
        }
    }
    const numerics::SpectralResult r = numerics::lowest_eigenpair(m);
    const oracle::JacobiResult ref = oracle::jacobi_eigen(m);
    CHECK(std::abs(r.eigenvalue - ref.eigenvalues.front()) <= 1e-10);
    double norm = 0.0;
    for (double x : r.eigenvector) norm += x * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.residual_norm <= 1e-12 * m.norm());
    const Matrix shifted = m + 2.5 * Matrix::Identity(50, 50);
    CHECK(numerics::lowest_eigenvalue(shifted) == doctest::Approx(r.eigenvalue + 2.5).epsilon(1e-12));
}

TEST_CASE("lowest eigenpair rejects non-symmetric input") {
    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    CHECK_THROWS_AS(numerics::lowest_eigenpair(m), ContractError);
}

TEST_CASE("monotone bisection") {
    const auto a = numerics::bisect_monotone([](double x) { return x - 2.0; }, 0.0, 5.0, 1e-12);
    CHECK(a.x == doctest::Approx(2.0).epsilon(1e-12));
    const auto b = numerics::bisect_monotone([](double x) { return std::log(x); }, 0.1, 10.0,
                                             1e-10, numerics::BisectScale::log);
    CHECK(b.x == doctest::Approx(1.0).epsilon(1e-9));
    const auto c = numerics::bisect_monotone([](double x) { return std::log(x); }, 0.1, 20.0,
                                             1e-10, numerics::BisectScale::log);
    CHECK(std::abs(c.x - b.x) <= 2e-10 * b.x);
    CHECK_THROWS_AS(numerics::bisect_monotone([](double x) { return x + 1.0; }, 0.0, 5.0),
                    BracketError);
}

TEST_CASE("bisection reports monotonicity violations") {
    auto f = [](double x) { return std::abs(x - 2.0) < 0.1 ? -5.0 : x - 1.0; };
    const auto r = numerics::bisect_monotone(f, 0.0, 4.0, 1e-8);
    CHECK_FALSE(r.monotone);
    CHECK_FALSE(r.warnings.empty());
}
