#pragma once

// Independent reference computations used by the test-suite and `bcs verify`.
// They deliberately avoid the production code paths they are compared with.

#include "bcs/numerics.hpp"
#include "bcs/potentials.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace bcs::oracle {

using numerics::Matrix;
using potentials::RadialPotential;

struct JacobiResult {
    std::vector<double> eigenvalues;  // ascending
    Matrix eigenvectors;              // columns aligned with eigenvalues
    int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal mass is below tol * ||M||_F.
JacobiResult jacobi_eigen(const Matrix& m, double tol = 1e-15, int max_sweeps = 100);

/// Adaptive Gauss-Kronrod over [a, b], split at the given interior points.
double adaptive_integral(const std::function<double(double)>& f, double a, double b,
                         std::vector<double> breaks = {}, double tol = 1e-11,
                         unsigned max_depth = 15);

struct SphereChannel {
    int l = 0;
    double e = 0.0;
    double overlap = 0.0;  // |<P_l | eigenvector>| of the identified eigenvector
};

/// Eigenvalues of V_mu in the m = 0 sector from a direct theta/phi discretisation of
/// the Fermi sphere (Gauss-Legendre in cos theta, trapezoid in phi), diagonalised by
/// Jacobi; channel l is identified by overlap with P_l(cos theta).
std::vector<SphereChannel> sphere_channel_eigenvalues(const RadialPotential& v, double mu,
                                                      int l_max, int n_theta = 48,
                                                      int n_phi = 96);

/// int int V(x) V(y) / |x - y| by the shell rule 16 pi^2 int int r^2 s^2 V(r) V(s) / max(r, s).
double bipolar_coulomb(const RadialPotential& v);

/// Finite-temperature form int [r^2 (Phi(r) - Phi(kF)) / K_T(r) + Phi(kF)] dr by nested
/// adaptive quadrature, with phi computed by its own angular integration.
double finite_t_wbar(const RadialPotential& v, double mu, double t);

/// Linear extrapolation of finite_t_wbar from T = 1e-6 mu and 1e-7 mu to T = 0.
double extrapolated_wbar(const RadialPotential& v, double mu);

/// Bracket (T_k, T_{k+1}) of the first change of f from negative to nonnegative on a
/// logarithmic sweep of [lo, hi].
std::pair<double, double> sweep_crossing(const std::function<double(double)>& f, double lo,
                                         double hi, int samples);

}  // namespace bcs::oracle
