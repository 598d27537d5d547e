#include "internal.hpp"

#include "bcs/asymptotics.hpp"
#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"
#include "bcs/gap_solver.hpp"
#include "bcs/linear_criterion.hpp"
#include "bcs/oracles.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace bcs::cli {

namespace {

using potentials::RadialPotential;

constexpr double kEgamma = std::numbers::egamma;

std::string num(double x) {
    std::ostringstream s;
    s.precision(8);
    s << x;
    return s.str();
}

RadialPotential reference_gaussian() { return RadialPotential::gaussian(-5.0, 1.0); }

struct Outcome {
    bool pass = false;
    std::string measured;
    std::string target;
};

Outcome channel_oracle() {
    const RadialPotential v = reference_gaussian();
    const std::vector<oracle::SphereChannel> brute = oracle::sphere_channel_eigenvalues(v, 1.0, 2);
    double worst = 0.0;
    for (const oracle::SphereChannel& c : brute) {
        worst = std::max(worst, std::abs(c.e - fermi::vmu_channel_eigenvalue(v, 1.0, c.l)));
    }
    return {brute.size() == 3 && worst <= 1e-8, "max |diff| = " + num(worst), "<= 1e-8"};
}

Outcome mmu_asymptotics() {
    const double mu = 1.0;
    const double t = 1e-6;
    const double target = kEgamma - 2.0 + std::log(8.0 / std::numbers::pi);
    const double value = std::sqrt(mu) * fermi::mmu(mu, t) - std::log(mu / t);
    const double err = std::abs(value - target);
    return {err <= 1e-3, num(value) + " (|diff| = " + num(err) + ")",
            num(target) + " within 1e-3"};
}

Outcome vanishing_equivalence() {
    const RadialPotential v = reference_gaussian();
    const linear::TcResult tc = linear::critical_temperature(v, 1.0, 0.5);
    const gap::VanishingReport van = gap::gap_vanishing_temperature(v, 1.0, 0.5);
    const double rel = std::abs(van.t_vanish / tc.tc - 1.0);
    return {!tc.zero && van.collapse_confirmed && rel <= 1e-3,
            "T_c = " + num(tc.tc) + ", T_vanish = " + num(van.t_vanish) + ", rel = " + num(rel),
            "rel <= 1e-3"};
}

/// Lowest eigenvalue over channels 0..4; the grid is certified on the minimizing channel and
/// every other channel must sit above it by more than its own refinement change.
double lowest_kv(const RadialPotential& v, double mu, double t, double lambda) {
    const numerics::QuadratureGrid grid = linear::thermal_grid(v, mu, t, {});
    std::vector<linear::KVResult> per;
    for (int l = 0; l <= 4; ++l) {
        try {
            per.push_back(linear::lowest_eigenvalue_KV(v, l, mu, t, lambda, grid, true));
        } catch (const AccuracyError& e) {
            linear::KVResult r;
            r.spectral.eigenvalue = std::min(e.coarse(), e.fine());
            r.refined_eigenvalue = std::max(e.coarse(), e.fine());
            per.push_back(r);
        }
    }
    const auto best = std::min_element(per.begin(), per.end(), [](const auto& a, const auto& b) {
        return a.spectral.eigenvalue < b.spectral.eigenvalue;
    });
    if (!best->grid_converged) {
        throw AccuracyError("lowest channel not grid converged", best->spectral.eigenvalue,
                            best->refined_eigenvalue);
    }
    const double floor = std::max(best->spectral.eigenvalue, best->refined_eigenvalue);
    for (const linear::KVResult& r : per) {
        if (&r != &*best && std::min(r.spectral.eigenvalue, r.refined_eigenvalue) <= floor) {
            throw AccuracyError("channel ordering unresolved by refinement", floor,
                                r.spectral.eigenvalue);
        }
    }
    return best->spectral.eigenvalue;
}

Outcome monotonicity() {
    const RadialPotential v = reference_gaussian();
    const double mu = 1.0;
    const double lambda = 0.3;
    std::vector<double> eig;
    for (double f : {0.005, 0.01, 0.02, 0.05, 0.1}) {
        eig.push_back(lowest_kv(v, mu, f * mu, lambda));
    }
    std::vector<double> tcs;
    for (double l : {0.15, 0.3, 0.6}) {
        tcs.push_back(linear::critical_temperature(v, mu, l).tc);
    }
    const bool eig_ok = std::adjacent_find(eig.begin(), eig.end(), std::greater_equal<>()) ==
                        eig.end();
    const bool tc_ok = std::is_sorted(tcs.begin(), tcs.end());
    std::ostringstream m;
    m << "eigenvalues";
    for (double e : eig) m << ' ' << num(e);
    m << "; T_c";
    for (double t : tcs) m << ' ' << num(t);
    return {eig_ok && tc_ok, m.str(), "eigenvalues strictly increasing, T_c nondecreasing"};
}

unsigned ladder_jobs() {
    RunConfig cfg;
    const unsigned env = effective_jobs(cfg);
    if (env > 1) {
        return env;
    }
    return std::clamp(std::thread::hardware_concurrency(), 1u, 5u);
}

/// Shared by the three ladder criteria.
const asymptotics::AsymptoticsReport& ladder_report() {
    static const asymptotics::AsymptoticsReport report = [] {
        asymptotics::ReportOptions opts;
        opts.jobs = ladder_jobs();
        return asymptotics::asymptotic_report(reference_gaussian(), 1.0, {}, opts);
    }();
    return report;
}

Outcome leading_order() {
    const RadialPotential v = reference_gaussian();
    const double e_mu = fermi::vmu_channel_eigenvalue(v, 1.0, 0);
    const double target = -1.0 / e_mu;
    const asymptotics::AsymptoticsReport& rep = ladder_report();
    const double rel = std::abs(rep.leading.limit / target - 1.0);
    return {rep.ladder.size() >= 3 && rel <= 0.02,
            num(rep.leading.limit) + " (rel = " + num(rel) + ")", num(target) + " within 2%"};
}

Outcome tc_drift() {
    const double target = 2.0 - kEgamma - std::log(8.0 / std::numbers::pi);
    const asymptotics::AsymptoticsReport& rep = ladder_report();
    const double err = std::abs(rep.drift_tc.limit - target);
    return {rep.ladder.size() >= 3 && err <= 5e-2,
            num(rep.drift_tc.limit) + " (|diff| = " + num(err) + ")", num(target) + " within 5e-2"};
}

Outcome gap_drift_and_ratio() {
    const double drift_target = 2.0 - std::log(8.0);
    const double ratio_target = std::numbers::pi / std::exp(kEgamma);
    const asymptotics::AsymptoticsReport& rep = ladder_report();
    const double err = std::abs(rep.drift_xi.limit - drift_target);
    const double rel = std::abs(rep.ratio.limit / ratio_target - 1.0);
    return {rep.ladder.size() >= 3 && err <= 5e-2 && rel <= 0.02,
            "drift " + num(rep.drift_xi.limit) + ", ratio " + num(rep.ratio.limit),
            "drift " + num(drift_target) + " within 5e-2, ratio " + num(ratio_target) +
                " within 2%"};
}

Outcome born_oracle() {
    double worst = 0.0;
    for (const RadialPotential& v :
         {reference_gaussian(), RadialPotential::exponential(-3.0, 0.8)}) {
        const double direct = oracle::bipolar_coulomb(v);
        worst = std::max(worst, std::abs(fermi::coulomb_self_energy(v) / direct - 1.0));
    }
    return {worst <= 1e-6, "max rel = " + num(worst), "<= 1e-6"};
}

double sup_relative(const gap::GapFunction& a, const gap::GapFunction& b) {
    double diff = 0.0;
    double top = 0.0;
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        const double p = a.grid.nodes[i];
        diff = std::max(diff, std::abs(a.values[i] - b.nystrom(p)));
        top = std::max(top, std::abs(a.values[i]));
    }
    return top > 0.0 ? diff / top : diff;
}

/// Smooth random probe that vanishes on the Fermi sphere.
std::vector<double> hessian_probe(const gap::GapFunction& sol, std::mt19937_64& rng) {
    std::normal_distribution<double> coef(0.0, 1.0);
    std::uniform_real_distribution<double> width(0.5, 3.0);
    std::array<double, 5> a{};
    for (double& c : a) c = coef(rng);
    const double c = width(rng) * std::sqrt(sol.mu);
    std::vector<double> g(sol.grid.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = sol.grid.nodes[i] / c;
        double poly = 0.0;
        for (std::size_t k = a.size(); k-- > 0;) poly = poly * x + a[k];
        const double xi = sol.grid.kinetic[i];
        const double d = sol.values[i];
        g[i] = poly * std::exp(-0.5 * x * x) * (xi * xi / (xi * xi + d * d));
    }
    return g;
}

Outcome gap_properties() {
    const double mu = 1.0;
    const double lambda = 0.5;
    const std::vector<std::pair<std::string, RadialPotential>> catalog = {
        {"gaussian", reference_gaussian()},
        {"exponential", RadialPotential::exponential(-3.0, 0.8)},
        {"mix", RadialPotential::parse(
                    "mix:[gaussian:amp=-3,range=0.7;gaussian:amp=-1.5,range=1.6]")}};
    gap::GapOptions opts = asymptotics::ladder_gap_options();
    std::vector<std::string> failures;
    double worst_init = 0.0;
    double min_hessian = std::numeric_limits<double>::infinity();
    auto fail = [&](const std::string& name, const std::string& what) {
        failures.push_back(name + ": " + what);
    };
    std::mt19937_64 rng(20240611);

    for (const auto& [name, v] : catalog) {
        const gap::GapFunction d0 = gap::solve_gap(v, mu, lambda, 0.0, opts);
        if (!d0.converged || d0.normal_state) {
            fail(name, "T = 0 solve did not reach a gapped fixed point");
            continue;
        }
        if (*std::min_element(d0.values.begin(), d0.values.end()) < 0.0) {
            fail(name, "negative gap");
        }
        for (double init : {1e-3, 2.0}) {
            gap::GapOptions o = opts;
            o.initial = init * mu;
            const gap::GapFunction d1 = gap::solve_gap(v, mu, lambda, 0.0, o);
            const double dev = sup_relative(d0, d1);
            worst_init = std::max(worst_init, dev);
            if (!(dev <= 1e-6)) {
                fail(name, "initialization dependence " + num(dev));
            }
        }
        const gap::BCSState s = gap::derive_state(d0);
        for (std::size_t i = 0; i < s.alpha.size(); ++i) {
            const double a = s.alpha[i];
            const double gm = s.gamma[i];
            if (std::abs(a) > 0.5 || a * a > gm * (1.0 - gm) + 1e-15) {
                fail(name, "alpha/gamma admissibility at node " + std::to_string(i));
                break;
            }
        }
        const gap::ContinuityReport cont = gap::continuity_diagnostic(s);
        if (!cont.agree || !cont.gapped) {
            fail(name, "gap/continuity booleans disagree");
        }
        for (int k = 0; k < 50; ++k) {
            const double h = gap::hessian_form_t0(d0, hessian_probe(d0, rng));
            min_hessian = std::min(min_hessian, h);
            if (!(h >= 0.0)) {
                fail(name, "negative second variation " + num(h));
                break;
            }
        }

        const linear::TcResult tc = linear::critical_temperature(v, mu, lambda);
        const double t = 0.5 * tc.tc;
        const gap::GapFunction dt = gap::solve_gap(v, mu, lambda, t, opts);
        const gap::BCSState st = gap::derive_state(dt);
        const double normal = gap::normal_free_energy(dt.grid, t);
        if (!(st.free_energy < normal) || dt.normal_state) {
            fail(name, "F_T(solution) = " + num(st.free_energy) + " not below normal " +
                           num(normal));
        }
    }

    // Zero potential: normal state, both booleans false.
    const gap::GapFunction z = gap::solve_gap(RadialPotential::zero(), mu, lambda, 0.0, opts);
    const gap::ContinuityReport zc = gap::continuity_diagnostic(gap::derive_state(z));
    if (!zc.agree || zc.gapped) {
        fail("zero", "gap/continuity booleans disagree");
    }

    std::string measured = "init dev " + num(worst_init) + ", min Hessian " + num(min_hessian);
    for (const std::string& f : failures) {
        measured += "; " + f;
    }
    return {failures.empty(), measured,
            "all properties on gaussian, exponential, mix and zero potentials"};
}

Outcome small_mu_bridge() {
    const RadialPotential v = reference_gaussian();
    const double lambda = 0.3;
    const double a0 = fermi::born_a0(v, lambda);
    std::vector<double> d;
    for (double mu : {1e-1, 1e-2, 1e-3}) {
        const fermi::BmuReport r = fermi::bmu(v, mu, lambda);
        d.push_back(std::abs(1.0 / r.b_mu - 1.0 / a0) / std::sqrt(mu));
    }
    const bool ok = d[0] > d[1] && d[1] > d[2];
    return {ok, num(d[0]) + " > " + num(d[1]) + " > " + num(d[2]), "strictly decreasing"};
}

struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list = {
        {1, "channel eigenvalues vs sphere quadrature", channel_oracle},
        {2, "m_mu small-T asymptotics", mmu_asymptotics},
        {3, "linear criterion vs vanishing gap", vanishing_equivalence},
        {4, "monotonicity in T and lambda", monotonicity},
        {5, "leading-order lambda ln(mu/T_c)", leading_order},
        {6, "T_c next-order drift", tc_drift},
        {7, "gap drift and universal ratio", gap_drift_and_ratio},
        {8, "second Born Coulomb term vs bipolar quadrature", born_oracle},
        {9, "gap solver property suite", gap_properties},
        {10, "small-mu bridge to the Born scattering length", small_mu_bridge},
    };
    return list;
}

}  // namespace

std::string format_criterion(const CriterionResult& r) {
    std::ostringstream s;
    s << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name << ": measured " << r.measured
      << "; target " << r.target << " (" << num(r.seconds) << " s)";
    return s.str();
}

std::vector<CriterionResult> run_acceptance_ids(const std::vector<int>& ids,
                                                std::ostream* progress) {
    std::vector<CriterionResult> out;
    for (const Criterion& c : criteria()) {
        if (std::find(ids.begin(), ids.end(), c.id) == ids.end()) {
            continue;
        }
        CriterionResult r;
        r.id = c.id;
        r.name = c.name;
        const auto start = std::chrono::steady_clock::now();
        try {
            const Outcome o = c.run();
            r.pass = o.pass;
            r.measured = o.measured;
            r.target = o.target;
        } catch (const std::exception& e) {
            r.pass = false;
            r.measured = std::string("error: ") + e.what();
            r.target = "completes without error";
        }
        r.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (progress) {
            *progress << format_criterion(r) << std::endl;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CriterionResult> run_acceptance(bool full, std::ostream* progress) {
    if (full) {
        return run_acceptance_ids({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, progress);
    }
    return run_acceptance_ids({1, 2, 3, 4, 8, 10}, progress);
}

int run_verify(const std::string& suite, const RunConfig&, std::ostream& out) {
    const std::vector<CriterionResult> results = run_acceptance(suite == "full", &out);
    const auto passed = std::count_if(results.begin(), results.end(),
                                      [](const CriterionResult& r) { return r.pass; });
    out << passed << "/" << results.size() << " criteria passed\n";
    return passed == static_cast<long>(results.size()) ? kExitOk : kExitConvergence;
}

}  // namespace bcs::cli
