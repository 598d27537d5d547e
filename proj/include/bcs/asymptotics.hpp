#pragma once

#include "bcs/gap_solver.hpp"
#include "bcs/linear_criterion.hpp"
#include "bcs/potentials.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bcs::asymptotics {

using potentials::RadialPotential;

inline constexpr double kEulerGamma = 0.57721566490153286;
/// 8 e^{gamma - 2} / pi
inline constexpr double kTcPrefactor = 0.6138082602865561;
/// 8 / e^2
inline constexpr double kXiPrefactor = 1.0826822658929016;
/// pi / e^gamma
inline constexpr double kUniversalRatio = 1.7638769888620456;
/// Limit of ln(mu/T_c) + pi / (2 sqrt(mu) b): 2 - gamma - ln(8/pi)
inline constexpr double kDriftTcLimit = 0.48807267926803144;
/// Limit of ln(mu/Xi) + pi / (2 sqrt(mu) b): 2 - ln 8
inline constexpr double kDriftXiLimit = -0.07944154167983575;

/// mu 8 e^{gamma-2}/pi exp(pi / (2 sqrt(mu) b)); b must be negative.
double predict_tc_from_b(double mu, double b);
/// mu 8/e^2 exp(pi / (2 sqrt(mu) b)); b must be negative.
double predict_xi_from_b(double mu, double b);

double predict_tc(const RadialPotential& v, double mu, double lambda);
double predict_xi(const RadialPotential& v, double mu, double lambda);

struct LimitFit {
    double limit = 0.0;   // c0
    double slope = 0.0;   // c1
    double residual = 0.0;  // root-mean-square misfit
    double limit_stderr = 0.0;
    int points = 0;
};

/// Least-squares fit value = c0 + c1 lambda; needs at least 3 distinct lambda.
LimitFit extract_limit(std::span<const std::pair<double, double>> points);

/// {0.6, 0.45, 0.3, 0.225, 0.15} scaled by 1 / (20 * 0.15 * |e_mu|), so that
/// 1 / (lambda |e_mu|) stays at or below 20 on the whole ladder.
std::vector<double> default_ladder(double e_mu);

struct LadderEntry {
    double lambda = 0.0;
    double tc = 0.0;
    double xi = 0.0;
    double b_mu = 0.0;
    double drift_tc = 0.0;
    double drift_xi = 0.0;
    double ratio = 0.0;
    double leading = 0.0;  // lambda ln(mu / T_c)
    bool tc_grid_converged = false;
    bool gap_converged = false;
    std::vector<std::string> warnings;
};

struct AsymptoticsReport {
    double mu = 0.0;
    double e_mu = 0.0;
    double w_bar = 0.0;
    std::vector<LadderEntry> ladder;  // decreasing lambda
    LimitFit drift_tc;
    LimitFit drift_xi;
    LimitFit ratio;
    LimitFit leading;
    double leading_target = 0.0;  // -1 / e_mu
    std::vector<std::string> warnings;
};

/// Gap-solver settings for ladders: undamped, long iteration budget.
inline gap::GapOptions ladder_gap_options() {
    gap::GapOptions g;
    g.damping = 1.0;
    g.tol = 1e-11;
    g.max_iter = 20000;
    return g;
}

struct ReportOptions {
    linear::TcOptions tc;
    gap::GapOptions gap = ladder_gap_options();
    unsigned jobs = 1;
};

/// Computes T_c, Xi and b_mu along a coupling ladder and extrapolates the drifts.
AsymptoticsReport asymptotic_report(const RadialPotential& v, double mu,
                                    std::vector<double> ladder, const ReportOptions& opts = {});

/// One ladder entry (exposed for the CLI scan).
LadderEntry ladder_entry(const RadialPotential& v, double mu, double lambda, double e_mu,
                         double w_bar, const ReportOptions& opts = {});

}  // namespace bcs::asymptotics
