#include "bcs/numerics.hpp"

#include "bcs/errors.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace bcs::numerics {

namespace {

GaussRule make_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    rule.one_minus.resize(n);
    // Newton in theta (x = cos theta) so that 1 - x = 2 sin^2(theta/2) keeps full precision.
    for (int k = 0; k < n; ++k) {
        double theta = std::numbers::pi * (k + 0.75) / (n + 0.5);
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            const double x = std::cos(theta);
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p0 = 1.0;
            }
            const double s = std::sin(theta);
            dp = n * (p0 - x * p1) / (s * s);  // P_n'(x)
            const double step = p1 / (s * dp);  // g / g' with g' = -sin(theta) P_n'
            theta += step;
            if (std::abs(step) < 1e-17) {
                break;
            }
        }
        const double x = std::cos(theta);
        const double s = std::sin(theta);
        {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p0 = 1.0;
            }
            dp = n * (p0 - x * p1) / (s * s);
        }
        const int idx = n - 1 - k;  // ascending in x
        rule.nodes[idx] = x;
        const double half = std::sin(0.5 * theta);
        rule.one_minus[idx] = 2.0 * half * half;
        rule.weights[idx] = 2.0 / (s * s * dp * dp);
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
        rule.one_minus[n / 2] = 1.0;
    }
    return rule;
}

struct Panel {
    double a;  // offsets from the Fermi momentum
    double b;
    int order;
};

}  // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1 || n > 4096) {
        throw ParameterError("gauss_legendre: order must lie in [1, 4096]");
    }
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<GaussRule>(make_rule(n));
    }
    return *slot;
}

double legendre_p(int l, double x) {
    if (l == 0) {
        return 1.0;
    }
    double p0 = 1.0;
    double p1 = x;
    for (int j = 2; j <= l; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

double QuadratureGrid::integrate(const std::function<double(double)>& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        sum += weights[i] * f(nodes[i]);
    }
    return sum;
}

void append_panels(std::span<const double> breaks, int order, std::vector<double>& nodes,
                   std::vector<double>& weights) {
    const GaussRule& rule = gauss_legendre(order);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double c = 0.5 * (breaks[k] + breaks[k + 1]);
        const double h = 0.5 * (breaks[k + 1] - breaks[k]);
        for (std::size_t j = 0; j < rule.size(); ++j) {
            nodes.push_back(c + h * rule.nodes[j]);
            weights.push_back(h * rule.weights[j]);
        }
    }
}

QuadratureGrid build_fermi_grid(double mu, double cutoff, int n_outer, int n_inner, double w_min) {
    if (!(mu > 0.0)) {
        throw ParameterError("build_fermi_grid: mu must be positive");
    }
    const double kf = std::sqrt(mu);
    if (!(cutoff > 2.0 * kf) || !std::isfinite(cutoff)) {
        throw ParameterError("build_fermi_grid: cutoff must exceed 2 sqrt(mu)");
    }
    if (!(w_min > 1e-14 && w_min < 1e-1)) {
        throw ParameterError("build_fermi_grid: w_min must lie in (1e-14, 1e-1)");
    }
    if (n_outer < 2 || n_inner < 1) {
        throw ParameterError("build_fermi_grid: node counts too small");
    }

    const double window = 0.5 * kf;
    const double h_min = w_min * kf;
    const int rings = static_cast<int>(std::ceil(std::log2(window / h_min)));
    std::vector<double> half_widths(rings + 1);
    for (int j = 0; j < rings; ++j) {
        half_widths[j] = std::ldexp(window, -j);
    }
    half_widths[rings] = h_min;

    const int inner_panels = 2 * rings + 1;
    const int ring_order = std::max(6, (n_inner + inner_panels - 1) / inner_panels);
    const int central_order = ring_order | 1;

    constexpr int outer_order = 10;
    const int outer_panels = std::max(2, (n_outer + outer_order - 1) / outer_order);
    const int left_panels = std::max(1, outer_panels / 5);
    const int right_panels = outer_panels - left_panels;

    std::vector<Panel> panels;
    // Left outer region [0, kF - window] in offset coordinates.
    for (int k = 0; k < left_panels; ++k) {
        const double a = -kf + (kf - window) * k / left_panels;
        const double b = -kf + (kf - window) * (k + 1) / left_panels;
        panels.push_back({a, b, outer_order});
    }
    for (int j = 0; j < rings; ++j) {
        panels.push_back({-half_widths[j], -half_widths[j + 1], ring_order});
    }
    panels.push_back({-h_min, h_min, central_order});
    for (int j = rings - 1; j >= 0; --j) {
        panels.push_back({half_widths[j + 1], half_widths[j], ring_order});
    }
    // Right outer region, panels growing geometrically towards the cutoff.
    {
        const double start = window;
        const double length = (cutoff - kf) - window;
        constexpr double ratio = 1.2;
        const double first = right_panels == 1
                                  ? length
                                  : length * (ratio - 1.0) / (std::pow(ratio, right_panels) - 1.0);
        double a = start;
        double width = first;
        for (int k = 0; k < right_panels; ++k) {
            const double b = (k + 1 == right_panels) ? cutoff - kf : a + width;
            panels.push_back({a, b, outer_order});
            a = b;
            width *= ratio;
        }
    }

    QuadratureGrid grid;
    grid.cutoff = cutoff;
    grid.fermi_momentum = kf;
    grid.inner_window = window;
    grid.w_min = w_min;
    for (const Panel& panel : panels) {
        const GaussRule& rule = gauss_legendre(panel.order);
        const double c = 0.5 * (panel.a + panel.b);
        const double h = 0.5 * (panel.b - panel.a);
        const bool central = panel.a == -h_min && panel.b == h_min;
        for (std::size_t j = 0; j < rule.size(); ++j) {
            const double off = c + h * rule.nodes[j];
            if (central && j == rule.size() / 2) {
                grid.fermi_index = grid.nodes.size();
            }
            grid.offsets.push_back(off);
            grid.nodes.push_back(kf + off);
            grid.kinetic.push_back(off * (2.0 * kf + off));
            grid.weights.push_back(h * rule.weights[j]);
        }
        if (std::abs(panel.a) <= window && std::abs(panel.b) <= window) {
            grid.n_inner += static_cast<int>(rule.size());
        } else {
            grid.n_outer += static_cast<int>(rule.size());
        }
    }
    return grid;
}

void require_symmetric(const Matrix& matrix, double rel_tol) {
    if (matrix.rows() != matrix.cols() || matrix.rows() < 1) {
        throw ContractError("matrix must be square with dimension >= 1");
    }
    const double scale = matrix.cwiseAbs().maxCoeff();
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > rel_tol * scale) {
        std::ostringstream msg;
        msg << "matrix is not symmetric (max asymmetry " << asym << ", scale " << scale << ")";
        throw ContractError(msg.str());
    }
}

SpectralResult lowest_eigenpair(const Matrix& matrix, double tol) {
    require_symmetric(matrix);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix, Eigen::ComputeEigenvectors);
    const Eigen::VectorXd v = solver.info() == Eigen::Success
                                  ? Eigen::VectorXd(solver.eigenvectors().col(0).normalized())
                                  : Eigen::VectorXd::Zero(matrix.rows());
    SpectralResult result;
    result.eigenvalue = solver.info() == Eigen::Success ? solver.eigenvalues()(0) : 0.0;
    result.eigenvector.assign(v.data(), v.data() + v.size());
    result.residual_norm = (matrix * v - result.eigenvalue * v).norm();
    const double scale = std::max(matrix.norm(), std::numeric_limits<double>::min());
    if (solver.info() != Eigen::Success || result.residual_norm > tol * scale) {
        throw ConvergenceError("lowest_eigenpair: eigensolver did not converge",
                               result.eigenvector);
    }
    return result;
}

double lowest_eigenvalue(const Matrix& matrix) {
    require_symmetric(matrix);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("lowest_eigenvalue: eigensolver did not converge");
    }
    return solver.eigenvalues()(0);
}

BisectResult bisect_monotone(const std::function<double(double)>& f, double lo, double hi,
                             double tol, BisectScale scale, int max_iter) {
    if (!(lo < hi)) {
        throw ParameterError("bisect_monotone: require lo < hi");
    }
    if (scale == BisectScale::log && !(lo > 0.0)) {
        throw ParameterError("bisect_monotone: log scale requires lo > 0");
    }
    BisectResult result;
    auto record = [&](double x, double fx) {
        ++result.evaluations;
        auto it = std::lower_bound(result.samples.begin(), result.samples.end(), x,
                                   [](const auto& s, double v) { return s.first < v; });
        it = result.samples.insert(it, {x, fx});
        const bool bad_left = it != result.samples.begin() && std::prev(it)->second > fx;
        const bool bad_right = std::next(it) != result.samples.end() && std::next(it)->second < fx;
        if (bad_left || bad_right) {
            result.monotone = false;
            std::ostringstream msg;
            msg << "monotonicity violated near x = " << x;
            result.warnings.push_back(msg.str());
        }
    };

    double f_lo = f(lo);
    record(lo, f_lo);
    double f_hi = f(hi);
    record(hi, f_hi);
    if (!(f_lo < 0.0) || !(f_hi >= 0.0)) {
        std::ostringstream msg;
        msg << "bisect_monotone: root not bracketed (f(lo) = " << f_lo << ", f(hi) = " << f_hi
            << ")";
        throw BracketError(msg.str());
    }
    auto midpoint = [&](double a, double b) {
        return scale == BisectScale::log ? std::sqrt(a * b) : 0.5 * (a + b);
    };
    int it = 0;
    while (hi - lo > tol * std::abs(midpoint(lo, hi))) {
        if (it++ >= max_iter) {
            result.warnings.push_back("bisect_monotone: iteration budget exhausted");
            break;
        }
        const double mid = midpoint(lo, hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double fm = f(mid);
        record(mid, fm);
        if (fm < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    result.lo = lo;
    result.hi = hi;
    result.f_lo = f_lo;
    result.f_hi = f_hi;
    result.x = midpoint(lo, hi);
    return result;
}

}  // namespace bcs::numerics
