#include "bcs/asymptotics.hpp"

#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <set>
#include <sstream>

namespace bcs::asymptotics {

namespace {

double exponent(double mu, double b) {
    if (!(mu > 0.0)) {
        throw ParameterError("prediction: mu must be positive");
    }
    if (!(b < 0.0)) {
        std::ostringstream msg;
        msg << "prediction requires b_mu < 0 (got " << b << ")";
        throw RegimeError(msg.str());
    }
    return std::exp(std::numbers::pi / (2.0 * std::sqrt(mu) * b));
}

}  // namespace

double predict_tc_from_b(double mu, double b) { return mu * kTcPrefactor * exponent(mu, b); }

double predict_xi_from_b(double mu, double b) { return mu * kXiPrefactor * exponent(mu, b); }

double predict_tc(const RadialPotential& v, double mu, double lambda) {
    return predict_tc_from_b(mu, fermi::bmu(v, mu, lambda).b_mu);
}

double predict_xi(const RadialPotential& v, double mu, double lambda) {
    return predict_xi_from_b(mu, fermi::bmu(v, mu, lambda).b_mu);
}

LimitFit extract_limit(std::span<const std::pair<double, double>> points) {
    std::set<double> distinct;
    for (const auto& pt : points) {
        distinct.insert(pt.first);
    }
    if (distinct.size() < 3) {
        throw ParameterError("extract_limit: need at least 3 distinct lambda values");
    }
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = points[i].first;
        y(i) = points[i].second;
    }
    const Eigen::Matrix2d normal = a.transpose() * a;
    Eigen::FullPivLU<Eigen::Matrix2d> lu(normal);
    if (!lu.isInvertible()) {
        throw ParameterError("extract_limit: degenerate design");
    }
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd r = a * c - y;
    LimitFit fit;
    fit.limit = c(0);
    fit.slope = c(1);
    fit.points = static_cast<int>(n);
    fit.residual = std::sqrt(r.squaredNorm() / static_cast<double>(n));
    const double sigma2 = n > 2 ? r.squaredNorm() / static_cast<double>(n - 2) : 0.0;
    fit.limit_stderr = std::sqrt(sigma2 * lu.inverse()(0, 0));
    return fit;
}

std::vector<double> default_ladder(double e_mu) {
    if (!(e_mu < 0.0)) {
        throw RegimeError("default_ladder: requires e_mu < 0");
    }
    const double s = 1.0 / (20.0 * 0.15 * std::abs(e_mu));
    std::vector<double> ladder{0.6, 0.45, 0.3, 0.225, 0.15};
    for (double& l : ladder) {
        l *= s;
    }
    return ladder;
}

LadderEntry ladder_entry(const RadialPotential& v, double mu, double lambda, double e_mu,
                         double w_bar, const ReportOptions& opts) {
    LadderEntry e;
    e.lambda = lambda;
    e.b_mu = fermi::bmu_value(mu, lambda, e_mu, w_bar);
    const linear::TcResult tc = linear::critical_temperature(v, mu, lambda, opts.tc);
    e.warnings = tc.warnings;
    if (tc.zero) {
        e.warnings.push_back("T_c below the floor");
        return e;
    }
    e.tc = tc.tc;
    e.tc_grid_converged = tc.grid_report.converged;
    gap::GapOptions g = opts.gap;
    if (!g.initial && e.b_mu < 0.0) {
        g.initial = predict_xi_from_b(mu, e.b_mu);
    }
    const gap::GapFunction delta = gap::solve_gap(v, mu, lambda, 0.0, g);
    e.gap_converged = delta.converged && !delta.normal_state;
    e.warnings.insert(e.warnings.end(), delta.warnings.begin(), delta.warnings.end());
    e.xi = gap::energy_gap(delta);
    const double shift = e.b_mu < 0.0 ? std::numbers::pi / (2.0 * std::sqrt(mu) * e.b_mu) : 0.0;
    e.drift_tc = std::log(mu / e.tc) + shift;
    e.drift_xi = e.xi > 0.0 ? std::log(mu / e.xi) + shift : 0.0;
    e.ratio = e.xi / e.tc;
    e.leading = lambda * std::log(mu / e.tc);
    return e;
}

AsymptoticsReport asymptotic_report(const RadialPotential& v, double mu,
                                    std::vector<double> ladder, const ReportOptions& opts) {
    AsymptoticsReport rep;
    rep.mu = mu;
    const fermi::ChannelSpectrum spectrum = fermi::emu(v, mu);
    if (spectrum.argmin_l != 0) {
        throw RegimeError("asymptotic_report: lowest Fermi-sphere channel is not l = 0");
    }
    rep.e_mu = spectrum.entries.front().e;
    if (!(rep.e_mu < 0.0)) {
        throw RegimeError("asymptotic_report: requires e_mu < 0");
    }
    rep.w_bar = fermi::wmu_swave(v, mu);
    rep.leading_target = -1.0 / rep.e_mu;
    if (ladder.empty()) {
        ladder = default_ladder(rep.e_mu);
    }
    std::sort(ladder.begin(), ladder.end(), std::greater<>());

    std::vector<LadderEntry> entries(ladder.size());
    const unsigned jobs = std::max(1u, opts.jobs);
    for (std::size_t start = 0; start < ladder.size(); start += jobs) {
        std::vector<std::future<LadderEntry>> batch;
        const std::size_t stop = std::min(ladder.size(), start + jobs);
        for (std::size_t k = start; k < stop; ++k) {
            batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                       [&, k] {
                                           return ladder_entry(v, mu, ladder[k], rep.e_mu,
                                                               rep.w_bar, opts);
                                       }));
        }
        for (std::size_t k = start; k < stop; ++k) {
            entries[k] = batch[k - start].get();
        }
    }
    for (LadderEntry& e : entries) {
        if (e.tc > 0.0 && e.xi > 0.0) {
            rep.ladder.push_back(std::move(e));
        } else {
            std::ostringstream msg;
            msg << "lambda = " << e.lambda << " dropped (T_c or Xi not resolved)";
            rep.warnings.push_back(msg.str());
        }
    }
    if (rep.ladder.size() >= 3) {
        auto column = [&](auto field) {
            std::vector<std::pair<double, double>> pts;
            for (const LadderEntry& e : rep.ladder) {
                pts.emplace_back(e.lambda, field(e));
            }
            return extract_limit(pts);
        };
        rep.drift_tc = column([](const LadderEntry& e) { return e.drift_tc; });
        rep.drift_xi = column([](const LadderEntry& e) { return e.drift_xi; });
        rep.ratio = column([](const LadderEntry& e) { return e.ratio; });
        rep.leading = column([](const LadderEntry& e) { return e.leading; });
    } else {
        rep.warnings.push_back("fewer than 3 ladder entries; no extrapolation");
    }
    return rep;
}

}  // namespace bcs::asymptotics
