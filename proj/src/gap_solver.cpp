#include "bcs/gap_solver.hpp"

#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"
#include "bcs/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace bcs::gap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;

double snap4(double s) { return std::pow(4.0, std::floor(std::log(s) / std::log(4.0))); }

double window_for(double mu, double scale) {
    return std::clamp(snap4(scale) / (10.0 * mu), 1e-13, 0.05);
}

void rebuild(GapFunction& g, double scale, const GapOptions& opts) {
    const double cutoff =
        opts.cutoff > 0.0 ? opts.cutoff
                          : (g.grid.size() > 0 ? g.grid.cutoff
                                               : potentials::default_cutoff(g.potential, g.mu));
    g.grid = numerics::build_fermi_grid(g.mu, cutoff, opts.n_outer, opts.n_inner,
                                        window_for(g.mu, scale));
    g.legendre_order = potentials::select_legendre_order(g.potential, cutoff, 0);
    const int channel[] = {0};
    g.kernel = std::make_shared<const Matrix>(
        potentials::channel_kernels(g.potential, g.grid.nodes, channel, g.legendre_order)
            .front());
}

double linear_interp(const std::vector<double>& x, const std::vector<double>& y, double p) {
    auto it = std::upper_bound(x.begin(), x.end(), p);
    if (it == x.begin()) {
        return y.front();
    }
    if (it == x.end()) {
        return y.back();
    }
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    const double s = (p - x[j - 1]) / (x[j] - x[j - 1]);
    return (1.0 - s) * y[j - 1] + s * y[j];
}

/// w_j p_j^2 Delta_j tanh(E_j / 2T) / E_j
std::vector<double> source_terms(const GapFunction& g) {
    const std::size_t n = g.grid.size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double p = g.grid.nodes[j];
        const double e = std::hypot(g.grid.kinetic[j], g.values[j]);
        out[j] = g.grid.weights[j] * p * p * g.values[j] * pair_weight(e, g.t);
    }
    return out;
}

void check_regime(const RadialPotential& v) {
    const potentials::IntegrabilityReport rep = potentials::integrability_report(v);
    if (!rep.fourier_nonpositive || !(rep.fourier_at_zero < 0.0)) {
        throw RegimeError(
            "solve_gap: requires a potential with nonpositive Fourier transform and V^(0) < 0");
    }
}

void iterate(GapFunction& g, const GapOptions& opts) {
    if (!(opts.damping > 0.0 && opts.damping <= 1.0)) {
        throw ParameterError("solve_gap: damping must lie in (0, 1]");
    }
    if (!(opts.tol > 0.0) || opts.max_iter < 1) {
        throw ParameterError("solve_gap: tol must be positive and max_iter >= 1");
    }
    const double threshold = kNormalThreshold * g.mu;
    double scale = std::max(std::abs(g.at_fermi()), g.t);
    for (int it = 1; it <= opts.max_iter; ++it) {
        const std::size_t n = g.grid.size();
        const std::vector<double> src = source_terms(g);
        Eigen::Map<const Eigen::VectorXd> s(src.data(), static_cast<Eigen::Index>(n));
        const Eigen::VectorXd image = -g.lambda * ((*g.kernel) * s);
        std::vector<double> next(n);
        double diff = 0.0;
        double top = 0.0;
        double lowest = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = (1.0 - opts.damping) * g.values[i] + opts.damping * image(static_cast<Eigen::Index>(i));
            diff = std::max(diff, std::abs(next[i] - g.values[i]));
            top = std::max(top, std::abs(next[i]));
            lowest = std::min(lowest, next[i]);
        }
        g.iterations = it;
        if (lowest < -1e-13 * top && g.positivity_ok) {
            g.positivity_ok = false;
            g.warnings.push_back("iterate left the nonnegative cone");
        }
        g.values = std::move(next);
        if (top < threshold) {
            std::fill(g.values.begin(), g.values.end(), 0.0);
            g.normal_state = true;
            g.converged = true;
            g.residual = 0.0;
            return;
        }
        g.residual = diff / top;
        const double new_scale = std::max(std::abs(g.at_fermi()), g.t);
        if (new_scale > 4.0 * scale || new_scale < 0.25 * scale) {
            // Re-grid so the refined band follows the gap; values carried over by interpolation.
            const QuadratureGrid old = g.grid;
            const std::vector<double> old_values = g.values;
            rebuild(g, new_scale, opts);
            g.values.resize(g.grid.size());
            for (std::size_t i = 0; i < g.grid.size(); ++i) {
                g.values[i] = linear_interp(old.nodes, old_values, g.grid.nodes[i]);
            }
            scale = new_scale;
            ++g.regrids;
            continue;
        }
        if (g.residual <= opts.tol) {
            g.converged = true;
            return;
        }
    }
    std::ostringstream msg;
    msg << "no convergence in " << opts.max_iter << " iterations (residual " << g.residual << ")";
    g.warnings.push_back(msg.str());
}

void flag_collapse(GapFunction& g) {
    if (g.t == 0.0 && g.normal_state && fermi::emu(g.potential, g.mu).e_min < 0.0) {
        g.suspicious = true;
        g.warnings.push_back("T = 0 solution collapsed although e_mu < 0");
    }
}

}  // namespace

double GapFunction::nystrom(double p) const {
    const std::vector<double> src = source_terms(*this);
    double sum = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (src[j] != 0.0) {
            sum += potentials::angular_kernel_fixed(potential, 0, p, grid.nodes[j], legendre_order) *
                   src[j];
        }
    }
    return -lambda * sum;
}

double GapFunction::evaluate(double p) const {
    if (p < grid.nodes.front() || p > grid.nodes.back()) {
        return nystrom(p);
    }
    return linear_interp(grid.nodes, values, p);
}

std::vector<double> GapFunction::quasiparticle_energies() const {
    std::vector<double> e(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        e[i] = std::hypot(grid.kinetic[i], values[i]);
    }
    return e;
}

GapFunction solve_gap(const RadialPotential& v, double mu, double lambda, double t,
                      const GapOptions& opts) {
    if (!(mu > 0.0)) {
        throw ParameterError("solve_gap: mu must be positive");
    }
    if (!(lambda > 0.0)) {
        throw ParameterError("solve_gap: lambda must be positive");
    }
    if (!(t >= 0.0)) {
        throw ParameterError("solve_gap: T must be nonnegative");
    }
    GapFunction g;
    g.mu = mu;
    g.lambda = lambda;
    g.t = t;
    g.potential = v;
    const double initial = opts.initial.value_or(0.1 * mu);
    if (!(initial >= 0.0)) {
        throw ParameterError("solve_gap: initial gap must be nonnegative");
    }
    if (v.is_zero()) {
        rebuild(g, std::max({initial, t, 0.1 * mu}), opts);
        g.values.assign(g.grid.size(), 0.0);
        g.converged = true;
        g.normal_state = true;
        return g;
    }
    check_regime(v);
    rebuild(g, std::max(initial, t), opts);
    g.values.assign(g.grid.size(), initial);
    iterate(g, opts);
    flag_collapse(g);
    return g;
}

GapFunction solve_gap_from(const GapFunction& start, double t, const GapOptions& opts) {
    if (!(t >= 0.0)) {
        throw ParameterError("solve_gap: T must be nonnegative");
    }
    GapFunction g = start;
    g.t = t;
    g.converged = false;
    g.normal_state = false;
    g.suspicious = false;
    g.iterations = 0;
    g.regrids = 0;
    g.warnings.clear();
    if (g.potential.is_zero()) {
        std::fill(g.values.begin(), g.values.end(), 0.0);
        g.converged = true;
        g.normal_state = true;
        return g;
    }
    const double scale = std::max(std::abs(g.at_fermi()), t);
    if (window_for(g.mu, scale) != g.grid.w_min || g.grid.n_outer != opts.n_outer ||
        g.grid.n_inner != opts.n_inner) {
        const QuadratureGrid old = g.grid;
        const std::vector<double> old_values = g.values;
        rebuild(g, scale, opts);
        g.values.resize(g.grid.size());
        for (std::size_t i = 0; i < g.grid.size(); ++i) {
            g.values[i] = linear_interp(old.nodes, old_values, g.grid.nodes[i]);
        }
    }
    iterate(g, opts);
    flag_collapse(g);
    return g;
}

double energy_gap(const GapFunction& delta) {
    const std::vector<double> e = delta.quasiparticle_energies();
    double xi = *std::min_element(e.begin(), e.end());
    const double d = std::abs(delta.at_fermi());
    if (d == 0.0) {
        return xi;
    }
    const double kf = delta.grid.fermi_momentum;
    const double half = std::min(0.5 * kf, 8.0 * d / kf);
    constexpr int kMesh = 400;
    for (int k = 0; k <= kMesh; ++k) {
        const double off = -half + 2.0 * half * k / kMesh;
        const double p = kf + off;
        xi = std::min(xi, std::hypot(off * (2.0 * kf + off), delta.evaluate(p)));
    }
    return xi;
}

BCSState derive_state(const GapFunction& delta) {
    BCSState s;
    s.gap = delta;
    const std::size_t n = delta.grid.size();
    const double t = delta.t;
    s.alpha.resize(n);
    s.gamma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = delta.grid.kinetic[i];
        const double d = delta.values[i];
        const double e = std::hypot(xi, d);
        if (e == 0.0) {
            s.alpha[i] = 0.0;
            s.gamma[i] = 0.5;
            continue;
        }
        const double w = pair_weight(e, t);  // tanh(E/2T)/E, or 1/E at T = 0
        s.alpha[i] = 0.5 * d * w;
        s.gamma[i] = 0.5 - 0.5 * xi * w;
    }
    s.xi = energy_gap(delta);

    // One-sided limits of gamma at the Fermi momentum.
    const double kf = delta.grid.fermi_momentum;
    const double h = 1e-6 * delta.grid.w_min * kf;
    auto gamma_at = [&](double off) {
        const double xi = off * (2.0 * kf + off);
        const double d = delta.evaluate(kf + off);
        const double e = std::hypot(xi, d);
        return 0.5 - 0.5 * xi * pair_weight(e, t);
    };
    s.gamma_jump = std::abs(gamma_at(-h) - gamma_at(h));

    if (t == 0.0) {
        s.free_energy = free_energy_t0(delta.grid, *delta.kernel, delta.lambda, s.alpha);
    } else {
        s.free_energy = free_energy(delta.grid, *delta.kernel, delta.lambda, t, s.gamma, s.alpha);
    }
    return s;
}

ContinuityReport continuity_diagnostic(const BCSState& state) {
    if (state.gap.t != 0.0) {
        throw ContractError("continuity_diagnostic: requires a T = 0 state");
    }
    ContinuityReport r;
    r.gamma_jump = state.gamma_jump;
    r.xi = state.xi;
    r.gapped = state.xi > kNormalThreshold * state.gap.mu;
    r.continuous = state.gamma_jump < 1e-3;
    r.agree = r.gapped == r.continuous;
    return r;
}

namespace {

/// 4 pi sum_ij p_i^2 w_i a_i V_0(p_i, p_j) a_j p_j^2 w_j
double potential_form(const QuadratureGrid& grid, const Matrix& kernel,
                      std::span<const double> a) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = grid.nodes[i];
        u(i) = p * p * grid.weights[i] * a[i];
    }
    return 4.0 * kPi * u.dot(kernel * u);
}

void require_size(const QuadratureGrid& grid, std::span<const double> a, const char* what) {
    if (a.size() != grid.size()) {
        throw ParameterError(std::string(what) + ": field does not match the grid");
    }
}

}  // namespace

double free_energy_t0(const QuadratureGrid& grid, const Matrix& kernel, double lambda,
                      std::span<const double> alpha) {
    require_size(grid, alpha, "free_energy_t0");
    double kinetic = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a2 = alpha[i] * alpha[i];
        if (a2 > 0.25 * (1.0 + 1e-12)) {
            throw ContractError("free_energy_t0: |alpha| exceeds 1/2");
        }
        const double root = std::sqrt(std::max(0.0, 1.0 - 4.0 * a2));
        const double p = grid.nodes[i];
        // 1 - sqrt(1 - 4 a^2) written without cancellation
        kinetic += grid.weights[i] * p * p * 0.5 * std::abs(grid.kinetic[i]) * 4.0 * a2 / (1.0 + root);
    }
    return 4.0 * kPi * kinetic + lambda * potential_form(grid, kernel, alpha);
}

namespace {

/// sum over the eigenvalues eta of [[g, a], [a, 1 - g]] of eta ln eta
double entropy_density(double g, double a) {
    const double r = std::hypot(g - 0.5, a);
    const double up = 0.5 + r;
    const double down = (g * (1.0 - g) - a * a) / up;
    auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    return xlogx(up) + xlogx(std::max(down, 0.0));
}

}  // namespace

double free_energy(const QuadratureGrid& grid, const Matrix& kernel, double lambda, double t,
                   std::span<const double> gamma, std::span<const double> alpha) {
    require_size(grid, gamma, "free_energy");
    require_size(grid, alpha, "free_energy");
    if (!(t > 0.0)) {
        throw ParameterError("free_energy: T must be positive; use free_energy_t0 at T = 0");
    }
    double local = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double g = gamma[i];
        const double a = alpha[i];
        if (g < -1e-14 || g > 1.0 + 1e-14 || a * a > g * (1.0 - g) + 1e-14) {
            std::ostringstream msg;
            msg << "free_energy: inadmissible (gamma, alpha) = (" << g << ", " << a
                << ") at p = " << grid.nodes[i];
            throw ContractError(msg.str());
        }
        const double p = grid.nodes[i];
        local += grid.weights[i] * p * p *
                 (grid.kinetic[i] * g + t * entropy_density(std::clamp(g, 0.0, 1.0), a));
    }
    return 4.0 * kPi * local + lambda * potential_form(grid, kernel, alpha);
}

double normal_free_energy(const QuadratureGrid& grid, double t) {
    if (!(t > 0.0)) {
        throw ParameterError("normal_free_energy: T must be positive");
    }
    double local = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.kinetic[i] / t;
        // xi f + T [f ln f + (1 - f) ln(1 - f)] = -T ln(1 + e^{-xi/T})
        const double val = x > 0.0 ? -t * std::log1p(std::exp(-x)) : grid.kinetic[i] - t * std::log1p(std::exp(x));
        const double p = grid.nodes[i];
        local += grid.weights[i] * p * p * val;
    }
    return 4.0 * kPi * local;
}

double hessian_form_t0(const GapFunction& solution, std::span<const double> g) {
    const QuadratureGrid& grid = solution.grid;
    require_size(grid, g, "hessian_form_t0");
    if (solution.t != 0.0) {
        throw ContractError("hessian_form_t0: requires a T = 0 solution");
    }
    double kin = 0.0;
    double curv = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double xi = grid.kinetic[i];
        const double d = solution.values[i];
        const double e = std::hypot(xi, d);
        const double p = grid.nodes[i];
        const double wp = grid.weights[i] * p * p;
        kin += wp * e * g[i] * g[i];
        if (g[i] != 0.0) {
            if (xi == 0.0) {
                throw ContractError("hessian_form_t0: direction must vanish where |alpha| = 1/2");
            }
            // 8 |xi| alpha^2 g^2 / (1 - 4 alpha^2)^{3/2} with alpha = Delta / 2E
            curv += wp * 2.0 * d * d * e * g[i] * g[i] / (xi * xi);
        }
    }
    return 2.0 * (4.0 * kPi * kin + solution.lambda * potential_form(grid, *solution.kernel, g)) +
           8.0 * kPi * curv;
}

double hessian_form_normal(const QuadratureGrid& grid, const Matrix& kernel, double lambda,
                           double t, std::span<const double> g) {
    require_size(grid, g, "hessian_form_normal");
    double kin = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = grid.nodes[i];
        kin += grid.weights[i] * p * p * thermal_symbol(grid.kinetic[i], t) * g[i] * g[i];
    }
    return 2.0 * (4.0 * kPi * kin + lambda * potential_form(grid, kernel, g));
}

ShapeReport gap_shape_check(const GapFunction& delta) {
    ShapeReport r;
    const QuadratureGrid& grid = delta.grid;
    const double mu = delta.mu;
    // phi_hat carries the same angular integral with prefactor sqrt(mu) / (2^{3/2} pi).
    const double to_ring = 2.0 * kPi * mu * (2.0 * std::numbers::sqrt2 * kPi) / std::sqrt(mu);
    r.ring.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        r.ring[i] = to_ring * fermi::phi_hat(delta.potential, mu, grid.nodes[i]);
    }
    const double a_f = r.ring[grid.fermi_index];
    if (a_f == 0.0) {
        throw RegimeError("gap_shape_check: ring integral vanishes on the Fermi surface");
    }
    const double d_f = delta.at_fermi();
    if (d_f == 0.0) {
        throw RegimeError("gap_shape_check: gap vanishes on the Fermi surface");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.weights[i];
        num += w * delta.values[i] * r.ring[i];
        den += w * r.ring[i] * r.ring[i];
        r.sup_deviation =
            std::max(r.sup_deviation, std::abs(delta.values[i] / d_f - r.ring[i] / a_f));
    }
    r.f = -num / den;
    return r;
}

double mtilde(const GapFunction& delta) { return fermi::mtilde(delta.grid, delta.values); }

namespace {

struct QuadFit {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double residual = 0.0;
};

QuadFit fit_quadratic(const std::vector<std::pair<double, double>>& pts, double centre,
                      double scale) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Matrix a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = (pts[i].first - centre) / scale;
        a(i, 0) = 1.0;
        a(i, 1) = x;
        a(i, 2) = x * x;
        b(i) = pts[i].second;
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    QuadFit f{c(0), c(1), c(2), (a * c - b).cwiseAbs().maxCoeff()};
    return f;
}

/// Root of the fitted Delta^2(T) closest to the sampled range, in T units.
double fitted_root(const QuadFit& f, double centre, double scale) {
    double x;
    if (std::abs(f.c2) < 1e-14 * std::abs(f.c1)) {
        x = -f.c0 / f.c1;
    } else {
        const double disc = f.c1 * f.c1 - 4.0 * f.c2 * f.c0;
        if (disc < 0.0) {
            x = -f.c0 / f.c1;
        } else {
            const double q = -0.5 * (f.c1 + std::copysign(std::sqrt(disc), f.c1));
            const double r1 = q / f.c2;
            const double r2 = f.c0 / q;
            x = std::abs(r1) < std::abs(r2) ? r1 : r2;
        }
    }
    return centre + scale * x;
}

}  // namespace

VanishingReport gap_vanishing_temperature(const RadialPotential& v, double mu, double lambda,
                                          const GapOptions& opts) {
    VanishingReport rep;
    GapOptions o = opts;
    o.damping = 1.0;
    o.max_iter = std::max(opts.max_iter, 200000);
    o.tol = std::min(opts.tol, 1e-12);
    GapFunction zero_t = solve_gap(v, mu, lambda, 0.0, o);
    if (zero_t.normal_state || !zero_t.converged) {
        throw ConvergenceError("gap_vanishing_temperature: no nontrivial T = 0 gap",
                               zero_t.values);
    }
    rep.delta0 = zero_t.at_fermi();
    double estimate = rep.delta0 * std::exp(kEulerGamma) / kPi;

    auto sample = [&](double t, const GapFunction& from) {
        GapFunction g = solve_gap_from(from, t, o);
        if (!g.converged) {
            throw ConvergenceError("gap_vanishing_temperature: finite-T solve did not converge",
                                   g.values);
        }
        return g;
    };

    // Coarse pass to locate the transition, then a fine pass close below it.
    const double coarse[] = {0.3, 0.45, 0.6, 0.75, 0.9};
    const double fine[] = {0.95, 0.96, 0.97, 0.98, 0.99};
    for (int pass = 0; pass < 3; ++pass) {
        const double* fractions = pass == 0 ? coarse : fine;
        std::vector<std::pair<double, double>> pts;
        GapFunction from = zero_t;
        for (int k = 0; k < 5; ++k) {
            const double t = fractions[k] * estimate;
            GapFunction g = sample(t, from);
            if (g.normal_state) {
                break;
            }
            pts.emplace_back(t, g.at_fermi() * g.at_fermi());
            from = g;
        }
        if (pts.size() < 3) {
            // Estimate too high: move down and retry this pass.
            estimate *= pass == 0 ? 0.5 : 0.9;
            --pass;
            if (estimate < 1e-12 * mu) {
                throw ConvergenceError("gap_vanishing_temperature: transition not located", {});
            }
            continue;
        }
        const double centre = pts.back().first;
        const double scale = estimate;
        const QuadFit f = fit_quadratic(pts, centre, scale);
        estimate = fitted_root(f, centre, scale);
        rep.samples = pts;
        rep.fit_residual = f.residual;
    }
    rep.t_vanish = estimate;
    const GapFunction above = solve_gap_from(zero_t, 1.02 * estimate, o);
    rep.collapse_confirmed = above.normal_state;
    if (!rep.collapse_confirmed) {
        rep.warnings.push_back("solution above the fitted transition did not collapse");
    }
    return rep;
}

}  // namespace bcs::gap
