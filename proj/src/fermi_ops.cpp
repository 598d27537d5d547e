#include "bcs/fermi_ops.hpp"

#include "bcs/errors.hpp"
#include "bcs/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace bcs::fermi {

namespace {

constexpr double kPi = std::numbers::pi;

// int_{-1}^{1} g(1 - t) P_l(t) dt, with the order doubled until successive values agree.
template <class G>
double legendre_integral(G&& g, int l, double abs_tol) {
    auto at = [&](int order) {
        const numerics::GaussRule& rule = numerics::gauss_legendre(order);
        double sum = 0.0;
        for (std::size_t k = 0; k < rule.size(); ++k) {
            sum += rule.weights[k] * g(rule.one_minus[k]) * numerics::legendre_p(l, rule.nodes[k]);
        }
        return sum;
    };
    int order = potentials::kDefaultLegendreOrder;
    double prev = at(order);
    while (order < 2048) {
        order *= 2;
        const double next = at(order);
        if (std::abs(next - prev) <= abs_tol) {
            return next;
        }
        prev = next;
    }
    return prev;
}

double integrate_panels(const std::vector<double>& breaks, int order,
                        const std::function<double(double)>& f) {
    const numerics::GaussRule& rule = numerics::gauss_legendre(order);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double c = 0.5 * (breaks[k] + breaks[k + 1]);
        const double h = 0.5 * (breaks[k + 1] - breaks[k]);
        for (std::size_t j = 0; j < rule.size(); ++j) {
            sum += h * rule.weights[j] * f(c + h * rule.nodes[j]);
        }
    }
    return sum;
}

// Antiderivative of r^2 / (r + k).
double shell_primitive(double r, double k) { return 0.5 * r * r - k * r + k * k * std::log(r + k); }

}  // namespace

double vmu_channel_eigenvalue(const RadialPotential& v, double mu, int l) {
    if (!(mu > 0.0)) {
        throw ParameterError("vmu_channel_eigenvalue: mu must be positive");
    }
    if (l < 0) {
        throw ParameterError("vmu_channel_eigenvalue: l must be nonnegative");
    }
    const double tol = 1e-15 * 2.0 * v.fourier_bound();
    const double integral = legendre_integral(
        [&](double one_minus) { return v.fourier(std::sqrt(2.0 * mu * one_minus)); }, l, tol);
    return std::sqrt(mu / (2.0 * kPi)) * integral;
}

ChannelSpectrum emu(const RadialPotential& v, double mu, int l_max) {
    if (!(mu > 0.0)) {
        throw ParameterError("emu: mu must be positive");
    }
    if (l_max < 0) {
        throw ParameterError("emu: l_max must be nonnegative");
    }
    ChannelSpectrum spectrum;
    spectrum.mu = mu;
    spectrum.e_min = std::numeric_limits<double>::infinity();
    for (int l = 0; l <= l_max; ++l) {
        const double e = vmu_channel_eigenvalue(v, mu, l);
        spectrum.entries.push_back({l, e});
        if (e < spectrum.e_min) {
            spectrum.e_min = e;
            spectrum.argmin_l = l;
        }
    }
    for (int l = l_max + 1; l <= 2 * l_max; ++l) {
        if (vmu_channel_eigenvalue(v, mu, l) < spectrum.e_min - 1e-14 * v.fourier_bound()) {
            spectrum.truncation_stable = false;
            break;
        }
    }
    return spectrum;
}

double phi_hat(const RadialPotential& v, double mu, double r) {
    const double kf = std::sqrt(mu);
    const double d = r - kf;
    const double d2 = d * d;
    const double rk2 = 2.0 * r * kf;
    const double tol = 1e-15 * 2.0 * v.fourier_bound();
    const double integral = legendre_integral(
        [&](double one_minus) { return v.fourier(std::sqrt(d2 + rk2 * one_minus)); }, 0, tol);
    return kf / (2.0 * std::numbers::sqrt2 * kPi) * integral;
}

WmuResult wmu_swave_detail(const RadialPotential& v, double mu, const WmuOptions& opts) {
    if (!(mu > 0.0)) {
        throw ParameterError("wmu_swave: mu must be positive");
    }
    WmuResult result;
    if (v.is_zero()) {
        return result;
    }
    const double kf = std::sqrt(mu);
    double cutoff = opts.cutoff;
    if (cutoff <= 0.0) {
        cutoff = std::max(10.0 * std::max(kf, 1.0 / v.min_length()),
                          kf + std::min(v.momentum_extent(1e-9), 400.0 / v.min_length()));
    }
    if (!(cutoff > 2.0 * kf)) {
        throw ParameterError("wmu_swave: cutoff must exceed 2 sqrt(mu)");
    }
    result.cutoff = cutoff;

    auto big_phi = [&](double r) {
        const double ph = phi_hat(v, mu, r);
        return 4.0 * kPi * ph * ph;
    };
    const double phi_f = big_phi(kf);
    // Combined integrand; below kF the difference quotient form, above kF the
    // form with the large-r cancellation done exactly.
    auto below = [&](double r) {
        const double off = r - kf;
        return r * r * (big_phi(r) - phi_f) / (-off * (2.0 * kf + off)) + phi_f;
    };
    auto above = [&](double r) {
        const double off = r - kf;
        return (r * r * big_phi(r) - mu * phi_f) / (off * (2.0 * kf + off));
    };

    const double band = 0.5 * kf;
    // Parts independent of the exclusion window.
    std::vector<double> left_outer;
    for (int k = 0; k <= 8; ++k) {
        left_outer.push_back(band * k / 8.0);
    }
    std::vector<double> right_outer{kf + band};
    {
        const int panels = 32;
        const double ratio = 1.15;
        const double length = cutoff - (kf + band);
        double width = length * (ratio - 1.0) / (std::pow(ratio, panels) - 1.0);
        for (int k = 0; k < panels; ++k) {
            right_outer.push_back(k + 1 == panels ? cutoff : right_outer.back() + width);
            width *= ratio;
        }
    }
    const double fixed = integrate_panels(left_outer, 16, below) +
                         integrate_panels(right_outer, 16, above) -
                         mu * phi_f / (2.0 * kf) * std::log((cutoff + kf) / (cutoff - kf));

    auto evaluate = [&](double w) {
        const double h = w * kf;
        std::vector<double> lb;
        std::vector<double> rb;
        for (double hw = band; hw > 2.0 * h; hw *= 0.5) {
            lb.push_back(kf - hw);
            rb.push_back(kf + hw);
        }
        lb.push_back(kf - h);
        rb.push_back(kf + h);
        std::reverse(rb.begin(), rb.end());
        const double rings = integrate_panels(lb, 12, below) + integrate_panels(rb, 12, above);
        const double s_minus = (big_phi(kf - h) - phi_f) / (-h);
        const double s_plus = (big_phi(kf + h) - phi_f) / h;
        const double window =
            -s_minus * (shell_primitive(kf, kf) - shell_primitive(kf - h, kf)) +
            s_plus * (shell_primitive(kf + h, kf) - shell_primitive(kf, kf)) + 2.0 * h * phi_f;
        return fixed + rings + window;
    };

    const double scale = std::max(phi_f * kf, std::numeric_limits<double>::min());
    double w = opts.initial_window;
    double prev = evaluate(w);
    for (int i = 1; i <= opts.max_halvings; ++i) {
        w *= 0.5;
        const double next = evaluate(w);
        if (std::abs(next - prev) <= opts.stability * std::max(std::abs(next), scale)) {
            result.value = next;
            result.previous = prev;
            result.window = w;
            result.halvings = i;
            return result;
        }
        prev = next;
    }
    throw AccuracyError("wmu_swave: no self-convergence under window halving", prev,
                        evaluate(0.5 * w));
}

double bmu_value(double mu, double lambda, double e_mu, double w_bar) {
    return lambda * kPi / (2.0 * std::sqrt(mu)) * e_mu - lambda * lambda * kPi / (2.0 * mu) * w_bar;
}

BmuReport bmu(const RadialPotential& v, double mu, double lambda) {
    if (!(mu > 0.0)) {
        throw ParameterError("bmu: mu must be positive");
    }
    if (!(lambda > 0.0)) {
        throw ParameterError("bmu: lambda must be positive");
    }
    const ChannelSpectrum spectrum = emu(v, mu);
    if (spectrum.argmin_l != 0) {
        std::ostringstream msg;
        msg << "bmu: lowest Fermi-sphere channel is l = " << spectrum.argmin_l
            << "; only the constant-eigenfunction regime (l = 0) is supported";
        throw RegimeError(msg.str());
    }
    BmuReport rep;
    rep.mu = mu;
    rep.lambda = lambda;
    rep.e_mu = spectrum.entries.front().e;
    rep.w_bar = wmu_swave(v, mu);
    rep.b_mu = bmu_value(mu, lambda, rep.e_mu, rep.w_bar);
    rep.a0 = born_a0(v, lambda);
    if (rep.e_mu < 0.0) {
        rep.lambda_threshold = rep.w_bar >= 0.0 ? std::numeric_limits<double>::infinity()
                                                : -rep.e_mu * std::sqrt(mu) / -rep.w_bar;
    }
    return rep;
}

double coulomb_self_energy(const RadialPotential& v) {
    if (v.is_zero()) {
        return 0.0;
    }
    const double k_max = std::min(v.momentum_extent(1e-8), 1e4 / v.min_length());
    const double width = std::min(0.5 / v.max_length(), k_max / 64.0);
    const int panels = static_cast<int>(std::ceil(k_max / width));
    std::vector<double> breaks(panels + 1);
    for (int k = 0; k <= panels; ++k) {
        breaks[k] = k_max * k / panels;
    }
    const double integral = integrate_panels(breaks, 20, [&](double k) {
        const double f = v.fourier(k);
        return f * f;
    });
    return 16.0 * kPi * kPi * integral;
}

double born_a0(const RadialPotential& v, double lambda) {
    if (!(lambda >= 0.0)) {
        throw ParameterError("born_a0: lambda must be nonnegative");
    }
    const double c = lambda / (4.0 * kPi);
    const double first = v.fourier(0.0) / potentials::kFourierNorm;
    return c * first - c * c * coulomb_self_energy(v);
}

double mmu(double mu, double t) {
    if (!(mu > 0.0)) {
        throw ParameterError("mmu: mu must be positive");
    }
    if (!(t > 0.0)) {
        throw ParameterError("mmu: T must be positive");
    }
    const double kf = std::sqrt(mu);
    const double cutoff = std::max(3.0 * kf, std::sqrt(mu + 60.0 * t));
    const double w = std::clamp(t / (10.0 * mu), 1e-13, 0.09);
    const numerics::QuadratureGrid grid = numerics::build_fermi_grid(mu, cutoff, 200, 240, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = grid.nodes[i];
        sum += grid.weights[i] * (p * p / thermal_symbol(grid.kinetic[i], t) - 1.0);
    }
    sum += 0.5 * kf * std::log((cutoff + kf) / (cutoff - kf));
    return std::max(sum / mu, 0.0);
}

double mtilde(const numerics::QuadratureGrid& grid, std::span<const double> delta) {
    if (delta.size() != grid.size()) {
        throw ParameterError("mtilde: gap samples do not match the grid");
    }
    const double mu = grid.mu();
    const double at_fermi = std::abs(delta[grid.fermi_index]);
    if (!(at_fermi > 1e-300)) {
        throw RegimeError("mtilde: gap vanishes on the Fermi surface; the integral diverges");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = grid.nodes[i];
        const double e = std::hypot(grid.kinetic[i], delta[i]);
        sum += grid.weights[i] * (p * p / e - 1.0);
    }
    const double kf = grid.fermi_momentum;
    sum += 0.5 * kf * std::log((grid.cutoff + kf) / (grid.cutoff - kf));
    return std::max(sum / mu, 0.0);
}

}  // namespace bcs::fermi
