#pragma once

#include "bcs/numerics.hpp"
#include "bcs/potentials.hpp"

#include <span>
#include <string>
#include <vector>

namespace bcs::fermi {

using potentials::RadialPotential;

struct ChannelEntry {
    int l = 0;
    double e = 0.0;
};

/// Channel eigenvalues of the Fermi-sphere operator V_mu.
struct ChannelSpectrum {
    double mu = 0.0;
    std::vector<ChannelEntry> entries;
    int argmin_l = 0;
    double e_min = 0.0;
    bool truncation_stable = true;  // doubling l_max does not lower the minimum
};

/// Eigenvalue of V_mu on degree-l spherical harmonics (Funk-Hecke):
/// sqrt(mu / 2 pi) int_{-1}^{1} V^(sqrt(2 mu (1 - t))) P_l(t) dt.
double vmu_channel_eigenvalue(const RadialPotential& v, double mu, int l);

inline constexpr int kDefaultEllMax = 8;

ChannelSpectrum emu(const RadialPotential& v, double mu, int l_max = kDefaultEllMax);

/// phi^(r) of the constant Fermi-sphere state u = (4 pi mu)^{-1/2}.
double phi_hat(const RadialPotential& v, double mu, double r);

struct WmuOptions {
    double initial_window = 1e-2;  // relative to sqrt(mu)
    double stability = 1e-10;
    int max_halvings = 40;
    double cutoff = 0.0;  // 0 selects a cutoff from the potential's scales
};

struct WmuResult {
    double value = 0.0;
    double previous = 0.0;  // value before the final window halving
    double window = 0.0;    // final exclusion half-width relative to sqrt(mu)
    int halvings = 0;
    double cutoff = 0.0;
};

/// <u|W_mu|u> for the constant state, via the absolutely convergent combined integrand.
WmuResult wmu_swave_detail(const RadialPotential& v, double mu, const WmuOptions& opts = {});

inline double wmu_swave(const RadialPotential& v, double mu, const WmuOptions& opts = {}) {
    return wmu_swave_detail(v, mu, opts).value;
}

struct BmuReport {
    double mu = 0.0;
    double lambda = 0.0;
    double e_mu = 0.0;
    double w_bar = 0.0;
    double b_mu = 0.0;
    double a0 = 0.0;
    /// b_mu < 0 holds for all lambda below this value (infinite when w_bar >= 0 and e_mu < 0).
    double lambda_threshold = 0.0;
};

/// Effective Fermi-surface scattering length b_mu(lambda) in the constant-eigenfunction regime.
BmuReport bmu(const RadialPotential& v, double mu, double lambda);

/// b_mu from already computed e_mu and w_bar.
double bmu_value(double mu, double lambda, double e_mu, double w_bar);

/// int int V(x) V(y) / |x - y| dx dy, evaluated as 16 pi^2 int_0^inf V^(k)^2 dk.
double coulomb_self_energy(const RadialPotential& v);

/// Second-order Born scattering length (lambda/4pi) int V - (lambda/4pi)^2 int int V V / |x-y|.
double born_a0(const RadialPotential& v, double lambda);

/// m_mu(T) = max{ (1/mu) int_0^inf (r^2 / K_T(r) - 1) dr, 0 }.
double mmu(double mu, double t);

/// m~_mu for a gap sampled on `grid`: max{ (1/mu) int (p^2 / E(p) - 1) dp, 0 }.
double mtilde(const numerics::QuadratureGrid& grid, std::span<const double> delta);

}  // namespace bcs::fermi
