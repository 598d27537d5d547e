#pragma once

#include "bcs/numerics.hpp"
#include "bcs/potentials.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcs::gap {

using numerics::Matrix;
using numerics::QuadratureGrid;
using potentials::RadialPotential;

/// s-wave gap Delta(p) sampled on a Fermi-refined grid.
struct GapFunction {
    QuadratureGrid grid;
    std::vector<double> values;
    double mu = 0.0;
    double lambda = 0.0;
    double t = 0.0;
    RadialPotential potential;
    /// V_0(p_i, p_j) on the grid nodes (shared between copies).
    std::shared_ptr<const Matrix> kernel;
    int legendre_order = potentials::kDefaultLegendreOrder;

    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // relative sup-norm of the last update
    bool normal_state = false;
    bool positivity_ok = true;
    bool suspicious = false;  // T = 0 collapse although e_mu < 0
    int regrids = 0;
    std::vector<std::string> warnings;

    double at_fermi() const { return values.at(grid.fermi_index); }

    /// Right-hand side of the gap equation evaluated at an arbitrary momentum.
    double nystrom(double p) const;

    /// Linear interpolation between nodes; the Nystrom formula outside [p_0, p_{n-1}].
    double evaluate(double p) const;

    /// E(p_i) = sqrt((p_i^2 - mu)^2 + Delta_i^2).
    std::vector<double> quasiparticle_energies() const;
};

struct GapOptions {
    double damping = 0.5;
    double tol = 1e-10;
    int max_iter = 500;
    std::optional<double> initial;  // constant initial gap; default 0.1 mu
    int n_outer = 200;
    int n_inner = 240;
    double cutoff = 0.0;  // 0 selects potentials::default_cutoff
};

inline constexpr double kNormalThreshold = 1e-12;  // relative to mu

/// Damped fixed-point iteration of the s-wave gap equation at temperature t >= 0.
GapFunction solve_gap(const RadialPotential& v, double mu, double lambda, double t,
                      const GapOptions& opts = {});

/// Same, starting from a previous solution instead of a constant.
GapFunction solve_gap_from(const GapFunction& start, double t, const GapOptions& opts);

struct BCSState {
    GapFunction gap;
    double xi = 0.0;
    std::vector<double> alpha;
    std::vector<double> gamma;
    double free_energy = 0.0;
    double gamma_jump = 0.0;
};

BCSState derive_state(const GapFunction& delta);

/// Xi = min_p E(p) over the nodes and a dense mesh around the Fermi momentum.
double energy_gap(const GapFunction& delta);

struct ContinuityReport {
    double gamma_jump = 0.0;
    double xi = 0.0;
    bool gapped = false;      // xi > 1e-12 mu
    bool continuous = false;  // gamma_jump < 1e-3
    bool agree = false;
};

ContinuityReport continuity_diagnostic(const BCSState& state);

/// F_0(alpha) on the radial grid; requires |alpha| <= 1/2.
double free_energy_t0(const QuadratureGrid& grid, const Matrix& kernel, double lambda,
                      std::span<const double> alpha);

/// F_T(gamma, alpha) on the radial grid; requires 0 <= gamma <= 1 and alpha^2 <= gamma (1 - gamma).
double free_energy(const QuadratureGrid& grid, const Matrix& kernel, double lambda, double t,
                   std::span<const double> gamma, std::span<const double> alpha);

/// F_T of the normal state (Fermi-Dirac gamma, alpha = 0).
double normal_free_energy(const QuadratureGrid& grid, double t);

/// Second variation of F_0 at a T = 0 solution in direction g (s-wave, g on the grid nodes).
double hessian_form_t0(const GapFunction& solution, std::span<const double> g);

/// Second variation of F_T at the normal state: 2 <g| K_T + lambda V |g>.
double hessian_form_normal(const QuadratureGrid& grid, const Matrix& kernel, double lambda,
                           double t, std::span<const double> g);

struct ShapeReport {
    double f = 0.0;              // least-squares factor in Delta ~ -f A
    double sup_deviation = 0.0;  // sup |Delta/Delta(kF) - A/A(kF)|
    std::vector<double> ring;    // A(p_i)
};

/// Compares Delta with the Fermi-sphere ring integral A(p) = 2 pi mu int V^(...) dt.
ShapeReport gap_shape_check(const GapFunction& delta);

struct VanishingReport {
    double t_vanish = 0.0;
    double delta0 = 0.0;  // T = 0 gap at kF
    std::vector<std::pair<double, double>> samples;  // (T, Delta(kF)^2) used in the final fit
    double fit_residual = 0.0;
    bool collapse_confirmed = false;  // solution above t_vanish relaxes to the normal state
    std::vector<std::string> warnings;
};

/// Temperature at which the nonlinear finite-T gap vanishes, from a quadratic fit
/// of Delta(kF)^2 against T on samples 1 - 5 % below the transition.
VanishingReport gap_vanishing_temperature(const RadialPotential& v, double mu, double lambda,
                                          const GapOptions& opts = {});

/// m~_mu of a gap solution.
double mtilde(const GapFunction& delta);

}  // namespace bcs::gap
