#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"
#include "bcs/linear_criterion.hpp"
#include "bcs/numerics.hpp"

#include <doctest.h>

#include <cmath>

using namespace bcs;
using potentials::RadialPotential;

namespace {

RadialPotential gauss() { return RadialPotential::gaussian(-5.0, 1.0); }

double lowest_over_channels(const RadialPotential& v, double mu, double t, double lambda) {
    const numerics::QuadratureGrid g = linear::thermal_grid(v, mu, t);
    double best = INFINITY;
    for (int l = 0; l <= 4; ++l) {
        best = std::min(best, linear::lowest_eigenvalue_KV(v, l, mu, t, lambda, g).spectral.eigenvalue);
    }
    return best;
}

}  // namespace

TEST_CASE("kinetic symbol") {
    CHECK(linear::k_symbol(1.0, 1.0, 0.37) == doctest::Approx(0.74).epsilon(1e-15));
    CHECK(linear::k_symbol(2.0, 1.0, 0.0) == 1.0);
    CHECK(linear::k_symbol(0.5, 1.0, 0.0) == 0.5);
    CHECK(std::abs(linear::k_symbol(11.0, 1.0, 0.1) - 10.0) <= 1e-15 * 10.0);
    CHECK(linear::k_symbol(1.0 + 1e-9, 1.0, 0.2) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("zero potential assembles the diagonal symbol") {
    const double t = 0.05;
    const numerics::QuadratureGrid g = linear::thermal_grid(RadialPotential::zero(), 1.0, t);
    const linear::ChannelOperator op =
        linear::assemble_channel_operator(RadialPotential::zero(), 0, 1.0, t, 0.7, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(op.matrix(i, i) == doctest::Approx(linear::k_symbol(g.nodes[i] * g.nodes[i], 1.0, t)));
        if (i + 1 < g.size()) CHECK(op.matrix(i, i + 1) == 0.0);
    }
    const linear::KVResult r =
        linear::lowest_eigenvalue_KV(RadialPotential::zero(), 0, 1.0, t, 0.7, g);
    CHECK(r.spectral.eigenvalue >= 2 * t * (1 - 1e-10));
}

TEST_CASE("channel operator is symmetric and variational") {
    const RadialPotential v = gauss();
    const double t = 0.02;
    const numerics::QuadratureGrid g = linear::thermal_grid(v, 1.0, t);
    const linear::ChannelOperator op = linear::assemble_channel_operator(v, 0, 1.0, t, 0.5, g);
    CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // Rayleigh quotient of a bump at kF in the symmetrized basis
    Eigen::VectorXd x(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double p = g.nodes[i];
        x(i) = std::exp(-std::pow((p - 1.0) / 0.2, 2)) * std::sqrt(g.weights[i]) * p;
    }
    const double rq = x.dot(op.matrix * x) / x.squaredNorm();
    CHECK(rq >= numerics::lowest_eigenvalue(op.matrix));
}

TEST_CASE("unrefined grid is rejected at low temperature") {
    const numerics::QuadratureGrid coarse = numerics::build_fermi_grid(1.0, 10.0, 200, 240, 1e-2);
    CHECK_THROWS_AS(linear::assemble_channel_operator(gauss(), 0, 1.0, 1e-6, 0.3, coarse),
                    AccuracyError);
}

TEST_CASE("lowest eigenvalue: monotone in T and negative for strong coupling") {
    const RadialPotential v = gauss();
    double prev = -INFINITY;
    for (double t : {0.01, 0.02, 0.05, 0.1}) {
        const double e = lowest_over_channels(v, 1.0, t, 0.3);
        CHECK(e > prev);
        prev = e;
    }
    const numerics::QuadratureGrid g = linear::thermal_grid(v, 1.0, 1e-3);
    const linear::KVResult r = linear::lowest_eigenvalue_KV(v, 0, 1.0, 1e-3, 1.0, g, true);
    CHECK(r.spectral.eigenvalue < 0.0);
    CHECK(r.refinement_checked);
    CHECK(r.grid_converged);
}

TEST_CASE("critical temperature: zero potential and unphysical coupling") {
    const linear::TcResult z = linear::critical_temperature(RadialPotential::zero(), 1.0, 0.5);
    CHECK(z.zero);
    CHECK(z.tc == 0.0);
    CHECK_THROWS_AS(linear::critical_temperature(gauss(), 1.0, 1e3), BracketError);
}

TEST_CASE("critical temperature bracket and sign structure") {
    const RadialPotential v = gauss();
    const double mu = 1.0;
    const double lambda = 0.3;
    linear::TcOptions opts;
    const linear::TcResult r = linear::critical_temperature(v, mu, lambda, opts);
    REQUIRE_FALSE(r.zero);
    CHECK(r.tc > 0.0);
    CHECK(r.tc < 10 * mu);
    CHECK(r.channel == 0);
    CHECK(r.bracket.first < r.bracket.second);
    CHECK(r.grid_report.converged);
    for (std::size_t k = 1; k < r.eigen_trace.size(); ++k) {
        CHECK(r.eigen_trace[k].first > r.eigen_trace[k - 1].first);
    }
    CHECK(lowest_over_channels(v, mu, r.tc * (1 + 10 * opts.tol), lambda) >= 0.0);
    CHECK(lowest_over_channels(v, mu, r.tc * (1 - 10 * opts.tol), lambda) < 0.0);
}

TEST_CASE("T_c is positive for weak coupling and nondecreasing in lambda") {
    const RadialPotential v = gauss();
    double prev = 0.0;
    for (double lambda : {0.1, 0.2, 0.4}) {
        const linear::TcResult r = linear::critical_temperature(v, 1.0, lambda);
        CHECK_FALSE(r.zero);
        CHECK(r.tc >= prev);
        prev = r.tc;
    }
}

TEST_CASE("first-order Birman-Schwinger temperature") {
    // lambda m_mu(T1) sqrt(mu) e_mu = -1. ln T_c - ln T1 tends to w_bar / (sqrt(mu) e_mu^2).
    const RadialPotential v = gauss();
    const double mu = 1.0;
    const double e = fermi::emu(v, mu).e_min;
    const double limit = fermi::wmu_swave(v, mu) / (std::sqrt(mu) * e * e);
    double prev = INFINITY;
    for (double lambda : {0.3, 0.2, 0.15}) {
        const auto t1 = numerics::bisect_monotone(
            [&](double t) { return lambda * fermi::mmu(mu, t) * std::sqrt(mu) * e + 1.0; },
            1e-14 * mu, mu, 1e-12, numerics::BisectScale::log);
        const double tc = linear::critical_temperature(v, mu, lambda).tc;
        const double dev = std::abs(std::log(tc) - std::log(t1.x) - limit);
        CHECK(dev < prev);
        prev = dev;
    }
}
