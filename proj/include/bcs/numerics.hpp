#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bcs::numerics {

using Matrix = Eigen::MatrixXd;

/// Gauss-Legendre rule on [-1, 1]. `one_minus[k]` holds 1 - nodes[k] without cancellation.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> one_minus;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// Cached n-point Gauss-Legendre rule. Thread-safe; the returned reference stays valid.
const GaussRule& gauss_legendre(int n);

/// Legendre polynomial P_l(x) by the three-term recurrence.
double legendre_p(int l, double x);

/// Radial quadrature on (0, cutoff) with geometric refinement around the Fermi momentum.
///
/// The band [kF - inner_window, kF + inner_window] is cut into nested rings of
/// half-width inner_window * 2^-j down to w_min * kF, plus one central panel of
/// odd order whose middle node sits exactly on kF. `offsets` and `kinetic` are
/// p - kF and p^2 - mu evaluated from the exact panel offsets, so they keep full
/// relative precision arbitrarily close to the Fermi surface.
struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> offsets;
    std::vector<double> kinetic;
    double cutoff = 0.0;
    double fermi_momentum = 0.0;
    double inner_window = 0.0;
    double w_min = 0.0;
    int n_outer = 0;
    int n_inner = 0;
    std::size_t fermi_index = 0;

    std::size_t size() const noexcept { return nodes.size(); }
    double mu() const noexcept { return fermi_momentum * fermi_momentum; }

    /// Sum of w_i f(p_i) in ascending node order.
    double integrate(const std::function<double(double)>& f) const;
};

QuadratureGrid build_fermi_grid(double mu, double cutoff, int n_outer, int n_inner, double w_min);

/// Composite Gauss-Legendre nodes/weights over consecutive panels [breaks[k], breaks[k+1]].
void append_panels(std::span<const double> breaks, int order, std::vector<double>& nodes,
                   std::vector<double>& weights);

struct SpectralResult {
    double eigenvalue = 0.0;
    std::vector<double> eigenvector;
    double residual_norm = 0.0;
};

inline constexpr double kEigenTolerance = 1e-12;

/// Smallest eigenpair of a dense symmetric matrix (Householder tridiagonalisation + implicit QL).
SpectralResult lowest_eigenpair(const Matrix& matrix, double tol = kEigenTolerance);

/// Smallest eigenvalue only; same symmetry contract as lowest_eigenpair.
double lowest_eigenvalue(const Matrix& matrix);

/// Throws ContractError when |M - M^T| exceeds rel_tol * max|M|.
void require_symmetric(const Matrix& matrix, double rel_tol = 1e-12);

enum class BisectScale { linear, log };

struct BisectResult {
    double x = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double f_lo = 0.0;
    double f_hi = 0.0;
    int evaluations = 0;
    bool monotone = true;
    std::vector<std::pair<double, double>> samples;
    std::vector<std::string> warnings;
};

inline constexpr double kBisectTolerance = 1e-6;

/// Root of a nondecreasing function with f(lo) < 0 <= f(hi).
///
/// Stops when hi - lo <= tol * |x|. With BisectScale::log the midpoint is the
/// geometric mean, i.e. the search runs in ln x (requires 0 < lo). Samples
/// violating monotonicity are reported in `warnings`, the search continues.
BisectResult bisect_monotone(const std::function<double(double)>& f, double lo, double hi,
                             double tol = kBisectTolerance,
                             BisectScale scale = BisectScale::linear, int max_iter = 400);

}  // namespace bcs::numerics
