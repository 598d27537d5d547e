#include "bcs/linear_criterion.hpp"

#include "bcs/errors.hpp"
#include "bcs/thermal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace bcs::linear {

double k_symbol(double p2, double mu, double t) {
    if (t < 0.0) {
        throw ParameterError("k_symbol: T must be nonnegative");
    }
    return thermal_symbol(p2 - mu, t);
}

double thermal_window(double mu, double t) {
    const double raw = std::max(1e-13, t / (10.0 * mu));
    // Snapped down to a power of two so that nearby temperatures share one grid.
    const double snapped = std::exp2(std::floor(std::log2(raw)));
    return std::clamp(snapped, 1e-13, 0.05);
}

QuadratureGrid thermal_grid(const RadialPotential& v, double mu, double t,
                            const GridSettings& settings) {
    const double cutoff =
        settings.cutoff > 0.0 ? settings.cutoff : potentials::default_cutoff(v, mu);
    return numerics::build_fermi_grid(mu, cutoff, settings.n_outer, settings.n_inner,
                                      thermal_window(mu, t));
}

namespace {

Matrix kernel_for(const RadialPotential& v, int l, const QuadratureGrid& grid) {
    const int order = potentials::select_legendre_order(v, grid.cutoff, l);
    const int channel[] = {l};
    return potentials::channel_kernels(v, grid.nodes, channel, order).front();
}

void require_fermi_refinement(const QuadratureGrid& grid, double mu, double t) {
    if (t < 1e-3 * mu && grid.w_min > t / mu) {
        std::ostringstream msg;
        msg << "grid lacks Fermi refinement for T = " << t << " (w_min = " << grid.w_min << ")";
        throw AccuracyError(msg.str(), grid.w_min, t / mu);
    }
}

}  // namespace

ChannelOperator assemble_channel_operator(const RadialPotential& v, int l, double mu, double t,
                                          double lambda, const QuadratureGrid& grid,
                                          const Matrix* kernel) {
    if (!(mu > 0.0)) {
        throw ParameterError("assemble_channel_operator: mu must be positive");
    }
    if (t < 0.0) {
        throw ParameterError("assemble_channel_operator: T must be nonnegative");
    }
    if (l < 0) {
        throw ParameterError("assemble_channel_operator: l must be nonnegative");
    }
    require_fermi_refinement(grid, mu, t);
    const auto n = static_cast<Eigen::Index>(grid.size());
    ChannelOperator op{grid, l, mu, t, lambda, Matrix::Zero(n, n)};
    Matrix local;
    if (kernel == nullptr) {
        local = kernel_for(v, l, grid);
        kernel = &local;
    }
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i) = grid.nodes[i] * std::sqrt(grid.weights[i]);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            op.matrix(i, j) = op.matrix(j, i) = lambda * (s(i) * (*kernel)(i, j) * s(j));
        }
        op.matrix(j, j) = lambda * (s(j) * (*kernel)(j, j) * s(j)) + thermal_symbol(grid.kinetic[j], t);
    }
    return op;
}

KVResult lowest_eigenvalue_KV(const RadialPotential& v, int l, double mu, double t, double lambda,
                              const QuadratureGrid& grid, bool check_refinement) {
    KVResult out;
    out.spectral = numerics::lowest_eigenpair(
        assemble_channel_operator(v, l, mu, t, lambda, grid).matrix);
    if (!check_refinement) {
        return out;
    }
    const QuadratureGrid fine = numerics::build_fermi_grid(
        mu, grid.cutoff, 2 * grid.n_outer, 2 * grid.n_inner, grid.w_min);
    out.refinement_checked = true;
    out.refined_size = static_cast<int>(fine.size());
    out.refined_eigenvalue =
        numerics::lowest_eigenvalue(assemble_channel_operator(v, l, mu, t, lambda, fine).matrix);
    const double e = out.spectral.eigenvalue;
    const double diff = std::abs(out.refined_eigenvalue - e);
    out.grid_converged =
        diff <= 1e-8 * std::max(std::abs(e), 2.0 * t) || diff <= 1e-12 * mu;
    if (!out.grid_converged) {
        throw AccuracyError("lowest_eigenvalue_KV: grid refinement changed the eigenvalue", e,
                            out.refined_eigenvalue);
    }
    return out;
}

double pairing_criterion(const Matrix& kernel, const QuadratureGrid& grid, double t,
                         double lambda) {
    if (!(t > 0.0)) {
        throw ParameterError("pairing_criterion: T must be positive");
    }
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i) = grid.nodes[i] * std::sqrt(grid.weights[i] / thermal_symbol(grid.kinetic[i], t));
    }
    const Matrix b = lambda * (s.asDiagonal() * kernel * s.asDiagonal());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(b, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("pairing_criterion: eigensolver failed", {});
    }
    return 1.0 + solver.eigenvalues()(0);
}

namespace {

/// Channel kernels cached per grid window.
class KernelCache {
public:
    KernelCache(const RadialPotential& v, double mu, const TcOptions& opts)
        : v_(v), mu_(mu), opts_(opts) {
        cutoff_ = opts.grid.cutoff > 0.0 ? opts.grid.cutoff : potentials::default_cutoff(v, mu);
        const int l_max = *std::max_element(opts.channels.begin(), opts.channels.end());
        order_ = potentials::select_legendre_order(v, cutoff_, l_max);
    }

    struct Entry {
        QuadratureGrid grid;
        std::vector<Matrix> kernels;
    };

    const Entry& at(double t, int scale = 1) {
        const double w = thermal_window(mu_, t);
        auto key = std::make_pair(w, scale);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            Entry e;
            e.grid = numerics::build_fermi_grid(mu_, cutoff_, scale * opts_.grid.n_outer,
                                                scale * opts_.grid.n_inner, w);
            e.kernels = potentials::channel_kernels(v_, e.grid.nodes, opts_.channels, order_);
            it = cache_.emplace(key, std::move(e)).first;
        }
        return it->second;
    }

    double cutoff() const { return cutoff_; }

private:
    const RadialPotential& v_;
    double mu_;
    const TcOptions& opts_;
    double cutoff_ = 0.0;
    int order_ = potentials::kDefaultLegendreOrder;
    std::map<std::pair<double, int>, Entry> cache_;
};

struct Criterion {
    double value;
    int channel;
};

double evaluate_channel(KernelCache& cache, double t, double lambda, std::size_t c,
                        int scale = 1) {
    const KernelCache::Entry& e = cache.at(t, scale);
    return pairing_criterion(e.kernels[c], e.grid, t, lambda);
}

Criterion evaluate(KernelCache& cache, const TcOptions& opts, double t, double lambda,
                   int scale = 1) {
    Criterion best{std::numeric_limits<double>::infinity(), opts.channels.front()};
    for (std::size_t c = 0; c < opts.channels.size(); ++c) {
        const double f = evaluate_channel(cache, t, lambda, c, scale);
        if (f < best.value) {
            best = {f, opts.channels[c]};
        }
    }
    return best;
}

}  // namespace

TcResult critical_temperature(const RadialPotential& v, double mu, double lambda,
                              const TcOptions& opts) {
    if (!(mu > 0.0)) {
        throw ParameterError("critical_temperature: mu must be positive");
    }
    if (!(lambda > 0.0)) {
        throw ParameterError("critical_temperature: lambda must be positive");
    }
    if (opts.channels.empty()) {
        throw ParameterError("critical_temperature: empty channel set");
    }
    for (int l : opts.channels) {
        if (l < 0) {
            throw ParameterError("critical_temperature: channels must be nonnegative");
        }
    }
    TcResult result;
    KernelCache cache(v, mu, opts);
    const double t_lo = kTcFloor * mu;
    const double t_hi = kTcCeiling * mu;
    const std::size_t nc = opts.channels.size();

    const Criterion top = evaluate(cache, opts, t_hi, lambda);
    if (top.value < 0.0) {
        std::ostringstream msg;
        msg << "critical_temperature: K + lambda V has a negative eigenvalue at T = " << t_hi
            << " (channel " << top.channel << ")";
        throw BracketError(msg.str());
    }
    std::vector<double> floor_values(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        floor_values[c] = evaluate_channel(cache, t_lo, lambda, c);
    }
    std::vector<std::size_t> order(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        order[c] = c;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return floor_values[a] < floor_values[b]; });
    if (floor_values[order.front()] >= 0.0) {
        result.zero = true;
        result.bracket = {0.0, t_lo};
        result.eigen_trace = {{t_lo, floor_values[order.front()]}, {t_hi, top.value}};
        result.grid_report.cutoff = cache.cutoff();
        return result;
    }

    // Channels are bisected in order of their floor value; a later channel only
    // matters if it is still negative at the current T_c.
    double lo = t_lo;
    bool found = false;
    for (std::size_t c : order) {
        if (floor_values[c] >= 0.0) {
            break;
        }
        if (found && evaluate_channel(cache, result.bracket.second, lambda, c) >= 0.0) {
            continue;
        }
        auto f = [&](double t) { return evaluate_channel(cache, t, lambda, c); };
        const numerics::BisectResult bis = numerics::bisect_monotone(
            f, found ? result.bracket.second : lo, t_hi, opts.tol, numerics::BisectScale::log);
        found = true;
        result.tc = bis.x;
        result.bracket = {bis.lo, bis.hi};
        result.channel = opts.channels[c];
        result.eigen_trace = bis.samples;
        result.warnings.insert(result.warnings.end(), bis.warnings.begin(), bis.warnings.end());
    }

    const KernelCache::Entry& work = cache.at(result.tc);
    const std::size_t critical = static_cast<std::size_t>(
        std::find(opts.channels.begin(), opts.channels.end(), result.channel) -
        opts.channels.begin());
    GridReport& rep = result.grid_report;
    rep.nodes = static_cast<int>(work.grid.size());
    rep.w_min = work.grid.w_min;
    rep.cutoff = work.grid.cutoff;
    rep.criterion = evaluate_channel(cache, result.tc, lambda, critical);
    if (opts.check_refinement) {
        rep.refined_nodes = static_cast<int>(cache.at(result.tc, 2).grid.size());
        rep.refined_criterion = evaluate_channel(cache, result.tc, lambda, critical, 2);
        rep.converged = std::abs(rep.refined_criterion - rep.criterion) <= 1e-8;
        if (!rep.converged) {
            std::ostringstream msg;
            msg << "grid refinement moved the criterion at T_c by "
                << rep.refined_criterion - rep.criterion;
            result.warnings.push_back(msg.str());
        }
    }
    return result;
}

}  // namespace bcs::linear
