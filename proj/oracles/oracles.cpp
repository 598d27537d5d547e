#include "bcs/oracles.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bcs::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

double gk(const std::function<double(double)>& f, double a, double b, double tol, unsigned depth) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol, &err);
}

}  // namespace

JacobiResult jacobi_eigen(const Matrix& input, double tol, int max_sweeps) {
    const Eigen::Index n = input.rows();
    if (n != input.cols()) {
        throw std::invalid_argument("jacobi_eigen: matrix must be square");
    }
    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(n, n);
    const double scale = a.norm();
    JacobiResult out;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                off += a(i, j) * a(i, j);
            }
        }
        out.sweeps = sweep;
        if (std::sqrt(2.0 * off) <= tol * scale) {
            break;
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        idx[static_cast<std::size_t>(i)] = i;
    }
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
    out.eigenvectors = Matrix(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.eigenvalues.push_back(a(idx[k], idx[k]));
        out.eigenvectors.col(k) = v.col(idx[k]);
    }
    return out;
}

double adaptive_integral(const std::function<double(double)>& f, double a, double b,
                         std::vector<double> breaks, double tol, unsigned max_depth) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        if (breaks[k] >= a && breaks[k + 1] <= b && breaks[k + 1] > breaks[k]) {
            sum += gk(f, breaks[k], breaks[k + 1], tol, max_depth);
        }
    }
    return sum;
}

std::vector<SphereChannel> sphere_channel_eigenvalues(const RadialPotential& v, double mu,
                                                      int l_max, int n_theta, int n_phi) {
    const double kf = std::sqrt(mu);
    const numerics::GaussRule& rule = numerics::gauss_legendre(n_theta);
    // Kernel (2 pi)^{-3/2} mu^{-1/2} V^(p - q) with surface measure mu dOmega.
    const double c = std::pow(2.0 * kPi, -1.5) / kf * mu;
    const double dphi = 2.0 * kPi / n_phi;
    Matrix k(n_theta, n_theta);
    for (int a = 0; a < n_theta; ++a) {
        const double ca = rule.nodes[a];
        const double sa = std::sqrt(1.0 - ca * ca);
        for (int b = 0; b < n_theta; ++b) {
            const double cb = rule.nodes[b];
            const double sb = std::sqrt(1.0 - cb * cb);
            double sum = 0.0;
            for (int m = 0; m < n_phi; ++m) {
                const double phi = m * dphi;
                // |p - q|^2 on the sphere of radius kF, Cartesian form
                const double dx = kf * (sa - sb * std::cos(phi));
                const double dy = kf * (-sb * std::sin(phi));
                const double dz = kf * (ca - cb);
                sum += v.fourier(std::sqrt(dx * dx + dy * dy + dz * dz));
            }
            k(a, b) = c * dphi * sum * std::sqrt(rule.weights[a] * rule.weights[b]);
        }
    }
    const JacobiResult jr = jacobi_eigen(k);
    std::vector<SphereChannel> out;
    for (int l = 0; l <= l_max; ++l) {
        Eigen::VectorXd pl(n_theta);
        for (int a = 0; a < n_theta; ++a) {
            pl(a) = numerics::legendre_p(l, rule.nodes[a]) * std::sqrt(rule.weights[a]);
        }
        pl.normalize();
        SphereChannel best;
        best.l = l;
        for (Eigen::Index col = 0; col < jr.eigenvectors.cols(); ++col) {
            const double ov = std::abs(pl.dot(jr.eigenvectors.col(col)));
            if (ov > best.overlap) {
                best.overlap = ov;
                best.e = jr.eigenvalues[static_cast<std::size_t>(col)];
            }
        }
        out.push_back(best);
    }
    return out;
}

double bipolar_coulomb(const RadialPotential& v) {
    if (v.is_zero()) {
        return 0.0;
    }
    const double r_max = v.radial_extent(1e-18);
    std::vector<double> breaks;
    for (double b : v.radial_breakpoints()) {
        if (b < r_max) {
            breaks.push_back(b);
        }
    }
    // Spherical shells: 32 pi^2 int_0^inf r V(r) [int_0^r s^2 V(s) ds] dr
    auto inner = [&](double r) {
        std::vector<double> bs;
        for (double b : breaks) {
            if (b < r) {
                bs.push_back(b);
            }
        }
        return adaptive_integral([&](double s) { return s * s * v.value(s); }, 0.0, r, bs, 1e-11);
    };
    const double outer = adaptive_integral([&](double r) { return r * v.value(r) * inner(r); }, 0.0,
                                           r_max, breaks, 1e-10);
    return 32.0 * kPi * kPi * outer;
}

namespace {

double oracle_phi(const RadialPotential& v, double mu, double r) {
    const double kf = std::sqrt(mu);
    // Fixed rule: phi must be a smooth function of r, free of adaptive switching noise.
    const double integral = boost::math::quadrature::gauss<double, 150>::integrate(
        [&](double t) { return v.fourier(std::sqrt(std::max(0.0, r * r + mu - 2.0 * kf * r * t))); },
        -1.0, 1.0);
    return kf / (2.0 * std::numbers::sqrt2 * kPi) * integral;
}

double coth_symbol(double xi, double t) {
    const double x = xi / (2.0 * t);
    if (std::abs(x) < 1e-8) {
        return 2.0 * t;
    }
    if (std::abs(x) > 350.0) {
        return std::abs(xi);
    }
    return xi * std::cosh(x) / std::sinh(x);
}

}  // namespace

double finite_t_wbar(const RadialPotential& v, double mu, double t) {
    const double kf = std::sqrt(mu);
    auto big_phi = [&](double r) {
        const double ph = oracle_phi(v, mu, r);
        return 4.0 * kPi * ph * ph;
    };
    const double phi_f = big_phi(kf);
    auto integrand = [&](double r) {
        const double xi = (r - kf) * (r + kf);
        return r * r * (big_phi(r) - phi_f) / coth_symbol(xi, t) + phi_f;
    };
    const double r_max = kf + std::max(40.0 / v.min_length(), 20.0 * kf);
    std::vector<double> breaks{0.5 * kf, 2.0 * kf};
    for (double w = 1e-1; w > 0.1 * t / mu; w *= 0.1) {
        breaks.push_back(kf * (1.0 - w));
        breaks.push_back(kf * (1.0 + w));
    }
    breaks.push_back(kf);
    // Near kF the relative tolerance is out of reach (cancellation in Phi - Phi_F divided by
    // K ~ 2T), so the recursion depth is capped; the rings around kF carry little weight.
    const double body = adaptive_integral(integrand, 0.0, r_max, breaks, 1e-10, 6);
    // Phi is negligible beyond r_max; the remaining integrand is -Phi_F mu / (r^2 - mu).
    const double tail = -phi_f * mu / (2.0 * kf) * std::log((r_max + kf) / (r_max - kf));
    return body + tail;
}

double extrapolated_wbar(const RadialPotential& v, double mu) {
    const double w6 = finite_t_wbar(v, mu, 1e-6 * mu);
    const double w7 = finite_t_wbar(v, mu, 1e-7 * mu);
    return w7 - (w6 - w7) / 9.0;
}

std::pair<double, double> sweep_crossing(const std::function<double(double)>& f, double lo,
                                         double hi, int samples) {
    double prev_t = lo;
    double prev_f = f(lo);
    for (int k = 1; k <= samples; ++k) {
        const double t = lo * std::pow(hi / lo, static_cast<double>(k) / samples);
        const double ft = f(t);
        if (prev_f < 0.0 && ft >= 0.0) {
            return {prev_t, t};
        }
        prev_t = t;
        prev_f = ft;
    }
    throw std::runtime_error("sweep_crossing: no sign change");
}

}  // namespace bcs::oracle
