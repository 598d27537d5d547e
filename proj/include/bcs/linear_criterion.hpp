#pragma once

#include "bcs/numerics.hpp"
#include "bcs/potentials.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bcs::linear {

using numerics::Matrix;
using numerics::QuadratureGrid;
using potentials::RadialPotential;

/// K_{T,mu}(p) = (p^2 - mu) coth((p^2 - mu) / 2T); |p^2 - mu| at T = 0.
double k_symbol(double p2, double mu, double t);

/// Symmetrized Nystrom matrix of K_{T,mu} + lambda V restricted to one partial wave.
struct ChannelOperator {
    QuadratureGrid grid;
    int l = 0;
    double mu = 0.0;
    double t = 0.0;
    double lambda = 0.0;
    Matrix matrix;
};

/// Grid parameters used by the critical-temperature search.
struct GridSettings {
    int n_outer = 200;
    int n_inner = 240;
    double cutoff = 0.0;  // 0 selects potentials::default_cutoff
};

/// Relative half-width of the innermost Fermi ring used at temperature t.
double thermal_window(double mu, double t);

QuadratureGrid thermal_grid(const RadialPotential& v, double mu, double t,
                            const GridSettings& settings = {});

/// Assembles one channel. `kernel` may supply precomputed V_l(p_i, p_j) for this grid.
ChannelOperator assemble_channel_operator(const RadialPotential& v, int l, double mu, double t,
                                          double lambda, const QuadratureGrid& grid,
                                          const Matrix* kernel = nullptr);

struct KVResult {
    numerics::SpectralResult spectral;
    bool refinement_checked = false;
    bool grid_converged = false;
    double refined_eigenvalue = 0.0;
    int refined_size = 0;
};

/// Lowest eigenvalue of the channel operator. With `check_refinement` the
/// eigenvalue is recomputed on a grid with doubled node counts; disagreement
/// beyond 1e-8 relative (scale max(|e|, 2T)) and 1e-12 mu absolute throws AccuracyError.
KVResult lowest_eigenvalue_KV(const RadialPotential& v, int l, double mu, double t, double lambda,
                              const QuadratureGrid& grid, bool check_refinement = false);

/// 1 + lowest eigenvalue of lambda K^{-1/2} V K^{-1/2} in channel l (T > 0).
///
/// K + lambda V = K^{1/2} (1 + lambda K^{-1/2} V K^{-1/2}) K^{1/2}, so this has the sign of
/// the lowest eigenvalue of K + lambda V, but it is O(1) in size and keeps full
/// precision when T_c is many orders of magnitude below the kinetic scale.
double pairing_criterion(const Matrix& kernel, const QuadratureGrid& grid, double t,
                         double lambda);

inline constexpr double kTcFloor = 1e-12;    // relative to mu
inline constexpr double kTcCeiling = 10.0;  // relative to mu

struct GridReport {
    int nodes = 0;
    int refined_nodes = 0;
    double w_min = 0.0;
    double cutoff = 0.0;
    double criterion = 0.0;          // pairing_criterion at tc on the working grid
    double refined_criterion = 0.0;  // same on the doubled grid
    bool converged = false;
};

struct TcResult {
    double tc = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
    int channel = 0;
    bool zero = false;  // no negative eigenvalue at the floor temperature
    /// (T, pairing_criterion minimized over channels), ascending T; sign equals that of the
    /// lowest eigenvalue of K + lambda V.
    std::vector<std::pair<double, double>> eigen_trace;
    GridReport grid_report;
    std::vector<std::string> warnings;
};

struct TcOptions {
    std::vector<int> channels{0, 1, 2, 3, 4};
    double tol = numerics::kBisectTolerance;
    GridSettings grid;
    bool check_refinement = true;
};

/// T_c: the crossing temperature of the lowest eigenvalue over all channels, bisected in ln T
/// on the pairing criterion over [1e-12 mu, 10 mu]. Returns a zero-flagged result when nothing is negative at the floor.
TcResult critical_temperature(const RadialPotential& v, double mu, double lambda,
                              const TcOptions& opts = {});

}  // namespace bcs::linear
