#include "bcs/asymptotics.hpp"
#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"
#include "bcs/gap_solver.hpp"
#include "bcs/linear_criterion.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace bcs;
using potentials::RadialPotential;

namespace {

RadialPotential gauss() { return RadialPotential::gaussian(-5.0, 1.0); }

gap::GapOptions opts() { return asymptotics::ladder_gap_options(); }

/// T = 0 solution at lambda = 0.5, solved once.
const gap::GapFunction& reference() {
    static const gap::GapFunction g = gap::solve_gap(gauss(), 1.0, 0.5, 0.0, opts());
    return g;
}

double sup_rel(const gap::GapFunction& a, const gap::GapFunction& b) {
    double d = 0.0;
    double top = 0.0;
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        d = std::max(d, std::abs(a.values[i] - b.nystrom(a.grid.nodes[i])));
        top = std::max(top, std::abs(a.values[i]));
    }
    return d / top;
}

}  // namespace

TEST_CASE("zero potential gives the normal state") {
    const gap::GapFunction g = gap::solve_gap(RadialPotential::zero(), 1.0, 0.5, 0.0);
    CHECK(g.normal_state);
    CHECK(std::all_of(g.values.begin(), g.values.end(), [](double d) { return d == 0.0; }));
    const gap::BCSState s = gap::derive_state(g);
    CHECK(s.xi == 0.0);
    CHECK(s.gamma_jump == doctest::Approx(1.0));
    CHECK(s.free_energy == doctest::Approx(0.0));
    const gap::ContinuityReport c = gap::continuity_diagnostic(s);
    CHECK_FALSE(c.gapped);
    CHECK_FALSE(c.continuous);
    CHECK(c.agree);
}

TEST_CASE("solver rejects unsupported potentials and options") {
    CHECK_THROWS_AS(gap::solve_gap(RadialPotential::square_well(-2.0, 1.5), 1.0, 0.5, 0.0),
                    RegimeError);
    gap::GapOptions bad;
    bad.damping = 1.5;
    CHECK_THROWS_AS(gap::solve_gap(gauss(), 1.0, 0.5, 0.0, bad), ParameterError);
}

TEST_CASE("T = 0 solution: positivity, convergence, initialization independence") {
    const gap::GapFunction& g = reference();
    REQUIRE(g.converged);
    CHECK_FALSE(g.normal_state);
    CHECK(g.positivity_ok);
    CHECK(*std::min_element(g.values.begin(), g.values.end()) >= 0.0);
    CHECK(g.residual <= 1e-11);
    gap::GapOptions o = opts();
    o.initial = 1e-4;
    const gap::GapFunction h = gap::solve_gap(gauss(), 1.0, 0.5, 0.0, o);
    CHECK(sup_rel(g, h) <= 1e-6);
}

TEST_CASE("fixed point holds off the grid") {
    const gap::GapFunction& g = reference();
    for (double p : {0.3, 0.99, 1.0, 1.7, 4.0}) {
        CHECK(g.nystrom(p) == doctest::Approx(g.evaluate(p)).epsilon(1e-4));
    }
    const double beyond = 1.5 * g.grid.cutoff;
    CHECK(g.evaluate(beyond) == g.nystrom(beyond));
}

TEST_CASE("solution is stable under grid doubling") {
    const gap::GapFunction& g = reference();
    gap::GapOptions o = opts();
    o.n_outer = 2 * g.grid.n_outer;
    o.n_inner = 2 * g.grid.n_inner;
    const gap::GapFunction h = gap::solve_gap(gauss(), 1.0, 0.5, 0.0, o);
    REQUIRE(h.converged);
    CHECK(sup_rel(g, h) <= 1e-6);
}

TEST_CASE("derived state invariants at T = 0") {
    const gap::BCSState s = gap::derive_state(reference());
    const gap::GapFunction& g = s.gap;
    const std::vector<double> e = g.quasiparticle_energies();
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
        CHECK(e[i] >= s.xi);
        CHECK(std::abs(s.alpha[i]) <= 0.5);
        CHECK(s.gamma[i] >= 0.0);
        CHECK(s.gamma[i] <= 1.0);
        CHECK(s.alpha[i] * s.alpha[i] <= s.gamma[i] * (1 - s.gamma[i]) + 1e-15);
        CHECK(2 * s.alpha[i] * e[i] == doctest::Approx(g.values[i]).epsilon(1e-12));
    }
    CHECK(std::abs(s.alpha[g.grid.fermi_index]) == doctest::Approx(0.5));
    CHECK(s.xi <= g.at_fermi());
    CHECK(s.xi > 0.0);
    const gap::ContinuityReport c = gap::continuity_diagnostic(s);
    CHECK(c.gapped);
    CHECK(c.continuous);
    CHECK(c.agree);
    CHECK(s.gamma_jump <= 1e-3);
}

TEST_CASE("finite temperature: equivalence with the linear criterion") {
    const double lambda = 0.5;
    const double tc = linear::critical_temperature(gauss(), 1.0, lambda).tc;
    const gap::GapFunction below = gap::solve_gap(gauss(), 1.0, lambda, 0.5 * tc, opts());
    CHECK(below.converged);
    CHECK(below.at_fermi() > 0.0);
    const gap::GapFunction above = gap::solve_gap(gauss(), 1.0, lambda, 1.2 * tc, opts());
    CHECK(above.normal_state);
    const gap::BCSState s = gap::derive_state(below);
    CHECK(s.free_energy < gap::normal_free_energy(below.grid, 0.5 * tc));
    for (std::size_t i = 0; i < s.alpha.size(); ++i) {
        CHECK(s.alpha[i] * s.alpha[i] <= s.gamma[i] * (1 - s.gamma[i]) + 1e-15);
    }
}

TEST_CASE("normal state at T > 0 is Fermi-Dirac") {
    const gap::GapFunction g = gap::solve_gap(RadialPotential::zero(), 1.0, 0.5, 0.1);
    const gap::BCSState s = gap::derive_state(g);
    for (std::size_t i = 0; i < g.grid.size(); i += 17) {
        const double xi = g.grid.kinetic[i];
        const double occupied = 1.0 / (std::exp(xi / 0.1) + 1.0);
        CHECK(s.gamma[i] == doctest::Approx(occupied).epsilon(1e-12));
    }
}

TEST_CASE("free energy functional") {
    const gap::GapFunction& g = reference();
    const std::vector<double> zero(g.grid.size(), 0.0);
    CHECK(gap::free_energy_t0(g.grid, *g.kernel, 0.5, zero) == 0.0);
    const gap::BCSState s = gap::derive_state(g);
    CHECK(s.free_energy < 0.0);
    // potential term linear in lambda
    const double f1 = gap::free_energy_t0(g.grid, *g.kernel, 1.0, s.alpha);
    const double f2 = gap::free_energy_t0(g.grid, *g.kernel, 2.0, s.alpha);
    const double f0 = gap::free_energy_t0(g.grid, *g.kernel, 0.0, s.alpha);
    CHECK(f2 - f1 == doctest::Approx(f1 - f0).epsilon(1e-12));
    std::vector<double> bad(g.grid.size(), 0.6);
    CHECK_THROWS_AS(gap::free_energy_t0(g.grid, *g.kernel, 0.5, bad), ContractError);
    std::vector<double> gm(g.grid.size(), 0.5);
    CHECK_THROWS_AS(gap::free_energy(g.grid, *g.kernel, 0.5, 0.1, gm, bad), ContractError);
}

TEST_CASE("second variation") {
    const gap::GapFunction& g = reference();
    std::vector<double> probe(g.grid.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double xi = g.grid.kinetic[i];
        probe[i] = std::exp(-g.grid.nodes[i]) * xi * xi / (xi * xi + 1e-2);
    }
    CHECK(gap::hessian_form_t0(g, probe) > 0.0);
    std::vector<double> bad(g.grid.size(), 1.0);
    CHECK_THROWS_AS(gap::hessian_form_t0(g, bad), ContractError);

    // normal state below T_c: Delta_T / K_T is a direction that lowers the functional
    const double t = 0.5 * linear::critical_temperature(gauss(), 1.0, 0.5).tc;
    const gap::GapFunction n = gap::solve_gap(gauss(), 1.0, 0.5, t, opts());
    REQUIRE_FALSE(n.normal_state);
    std::vector<double> pair(n.grid.size());
    for (std::size_t i = 0; i < pair.size(); ++i) {
        pair[i] = n.values[i] / linear::k_symbol(n.grid.nodes[i] * n.grid.nodes[i], 1.0, t);
    }
    CHECK(gap::hessian_form_normal(n.grid, *n.kernel, 0.5, t, pair) < 0.0);
    std::vector<double> bump(n.grid.size());
    for (std::size_t i = 0; i < bump.size(); ++i) {
        bump[i] = std::exp(-std::pow((n.grid.nodes[i] - 1.0) / 0.05, 2));
    }
    const numerics::Matrix none = numerics::Matrix::Zero(n.grid.size(), n.grid.size());
    CHECK(gap::hessian_form_normal(n.grid, none, 0.5, t, bump) > 0.0);
}

TEST_CASE("gap shape follows the ring integral") {
    double prev = INFINITY;
    for (double lambda : {0.6, 0.3, 0.15}) {
        gap::GapOptions o = opts();
        const fermi::BmuReport b = fermi::bmu(gauss(), 1.0, lambda);
        o.initial = asymptotics::predict_xi_from_b(1.0, b.b_mu);
        const gap::GapFunction g = gap::solve_gap(gauss(), 1.0, lambda, 0.0, o);
        const gap::ShapeReport r = gap::gap_shape_check(g);
        CHECK(r.f > 0.0);
        CHECK(r.sup_deviation < prev);
        CHECK(r.ring[g.grid.fermi_index] != 0.0);
        prev = r.sup_deviation;
    }
}

TEST_CASE("energy gap lower bound tightens along the coupling ladder") {
    double prev = INFINITY;
    for (double lambda : {0.6, 0.3, 0.15}) {
        gap::GapOptions o = opts();
        o.initial = asymptotics::predict_xi(gauss(), 1.0, lambda);
        const gap::GapFunction g = gap::solve_gap(gauss(), 1.0, lambda, 0.0, o);
        const double eps = 1.0 - gap::energy_gap(g) / g.at_fermi();
        CHECK(eps >= 0.0);
        CHECK(eps < prev);
        prev = eps;
    }
}

TEST_CASE("m~ consistency along the coupling ladder") {
    const double target = std::log(8.0) - 2.0;
    double prev = INFINITY;
    for (double lambda : {0.6, 0.3, 0.15}) {
        gap::GapOptions o = opts();
        o.initial = asymptotics::predict_xi(gauss(), 1.0, lambda);
        const gap::GapFunction g = gap::solve_gap(gauss(), 1.0, lambda, 0.0, o);
        const double dev = std::abs(gap::mtilde(g) - std::log(1.0 / g.at_fermi()) - target);
        CHECK(dev < prev);
        prev = dev;
    }
}
