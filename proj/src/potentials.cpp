#include "bcs/potentials.hpp"

#include "bcs/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

namespace bcs::potentials {

namespace {

constexpr double kPi = std::numbers::pi;

double term_value(const Term& t, double r) {
    switch (t.shape) {
        case Shape::gaussian:
            return t.amplitude * std::exp(-(r * r) / (t.length * t.length));
        case Shape::exponential:
            return t.amplitude * std::exp(-r / t.length);
        case Shape::square_well:
            return r < t.length ? t.amplitude : 0.0;
    }
    return 0.0;
}

// sin x - x cos x, with a series near zero.
double sin_minus_xcos(double x) {
    if (std::abs(x) < 1e-2) {
        const double x2 = x * x;
        return x * x2 * (1.0 / 3.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 840.0 - x2 / 45360.0)));
    }
    return std::sin(x) - x * std::cos(x);
}

double term_fourier(const Term& t, double k) {
    const double a = t.length;
    switch (t.shape) {
        case Shape::gaussian:
            return t.amplitude * a * a * a * 0.35355339059327379 * std::exp(-0.25 * k * k * a * a);
        case Shape::exponential: {
            const double s = 1.0 + k * k * a * a;
            return kFourierNorm * t.amplitude * 8.0 * kPi * a * a * a / (s * s);
        }
        case Shape::square_well: {
            if (k == 0.0) {
                return kFourierNorm * t.amplitude * 4.0 * kPi * a * a * a / 3.0;
            }
            const double x = k * a;
            return kFourierNorm * t.amplitude * 4.0 * kPi * a * a * a * sin_minus_xcos(x) /
                   (x * x * x);
        }
    }
    return 0.0;
}

double term_abs_integral(const Term& t) {
    const double a = t.length;
    const double amp = std::abs(t.amplitude);
    switch (t.shape) {
        case Shape::gaussian:
            return amp * std::pow(kPi, 1.5) * a * a * a;
        case Shape::exponential:
            return amp * 8.0 * kPi * a * a * a;
        case Shape::square_well:
            return amp * 4.0 * kPi * a * a * a / 3.0;
    }
    return 0.0;
}

std::string format_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view text, std::string_view key) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (!text.empty() && *begin == '+') {
        ++begin;
    }
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) {
        throw ParameterError("potential: invalid number for key '" + std::string(key) + "': '" +
                             std::string(text) + "'");
    }
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

// Split on `sep` at bracket depth zero.
std::vector<std::string_view> split_top(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '[') {
            ++depth;
        } else if (s[i] == ']') {
            --depth;
        } else if (s[i] == sep && depth == 0) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    parts.push_back(s.substr(start));
    return parts;
}

Term parse_term(std::string_view kind, std::string_view params) {
    Term term;
    std::string_view length_key;
    if (kind == "gaussian") {
        term.shape = Shape::gaussian;
        length_key = "range";
    } else if (kind == "square_well") {
        term.shape = Shape::square_well;
        length_key = "radius";
    } else if (kind == "exponential") {
        term.shape = Shape::exponential;
        length_key = "range";
    } else {
        throw ParameterError("potential: unknown shape '" + std::string(kind) + "'");
    }
    std::map<std::string, double, std::less<>> values;
    for (std::string_view item : split_top(params, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw ParameterError("potential: expected key=value, got '" + std::string(item) + "'");
        }
        const std::string key(trim(item.substr(0, eq)));
        if (key != "amp" && key != length_key) {
            throw ParameterError("potential: unknown key '" + key + "' for " + std::string(kind));
        }
        if (values.count(key) != 0) {
            throw ParameterError("potential: duplicate key '" + key + "'");
        }
        values[key] = parse_number(trim(item.substr(eq + 1)), key);
    }
    if (values.count("amp") == 0) {
        throw ParameterError("potential: missing key 'amp' for " + std::string(kind));
    }
    const auto len = values.find(length_key);
    if (len == values.end()) {
        throw ParameterError("potential: missing key '" + std::string(length_key) + "' for " +
                             std::string(kind));
    }
    if (!(len->second > 0.0)) {
        throw ParameterError("potential: key '" + std::string(length_key) + "' must be positive");
    }
    term.amplitude = values["amp"];
    term.length = len->second;
    return term;
}

void parse_into(std::string_view text, std::vector<Term>& terms) {
    text = trim(text);
    if (text == "zero") {
        return;
    }
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ParameterError("potential: expected '<shape>:<params>', got '" + std::string(text) +
                             "'");
    }
    const std::string_view kind = trim(text.substr(0, colon));
    const std::string_view rest = trim(text.substr(colon + 1));
    if (kind == "mix") {
        if (rest.size() < 2 || rest.front() != '[' || rest.back() != ']') {
            throw ParameterError("potential: mix expects 'mix:[term;term;...]'");
        }
        const std::string_view body = rest.substr(1, rest.size() - 2);
        for (std::string_view part : split_top(body, ';')) {
            if (!trim(part).empty()) {
                parse_into(part, terms);
            }
        }
        return;
    }
    terms.push_back(parse_term(kind, rest));
}

std::string term_spec(const Term& t) {
    switch (t.shape) {
        case Shape::gaussian:
            return "gaussian:amp=" + format_number(t.amplitude) + ",range=" + format_number(t.length);
        case Shape::square_well:
            return "square_well:amp=" + format_number(t.amplitude) +
                   ",radius=" + format_number(t.length);
        case Shape::exponential:
            return "exponential:amp=" + format_number(t.amplitude) +
                   ",range=" + format_number(t.length);
    }
    return {};
}

// Composite Gauss-Legendre integral of g over [0, extent] with panels no wider than `width`,
// split at the potential's breakpoints.
template <class G>
double radial_quadrature(const RadialPotential& v, double extent, double width, G&& g) {
    std::vector<double> breaks{0.0};
    for (double b : v.radial_breakpoints()) {
        if (b < extent) {
            breaks.push_back(b);
        }
    }
    breaks.push_back(extent);
    std::vector<double> fine{0.0};
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const int n = std::max(1, static_cast<int>(std::ceil((breaks[k + 1] - breaks[k]) / width)));
        for (int j = 1; j <= n; ++j) {
            fine.push_back(breaks[k] + (breaks[k + 1] - breaks[k]) * j / n);
        }
    }
    const numerics::GaussRule& rule = numerics::gauss_legendre(20);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < fine.size(); ++k) {
        const double c = 0.5 * (fine[k] + fine[k + 1]);
        const double h = 0.5 * (fine[k + 1] - fine[k]);
        for (std::size_t j = 0; j < rule.size(); ++j) {
            sum += h * rule.weights[j] * g(c + h * rule.nodes[j]);
        }
    }
    return sum;
}

}  // namespace

RadialPotential::RadialPotential(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const Term& t : terms_) {
        if (!(t.length > 0.0) || !std::isfinite(t.length) || !std::isfinite(t.amplitude)) {
            throw ParameterError("potential: lengths must be positive and amplitudes finite");
        }
    }
}

RadialPotential RadialPotential::gaussian(double amplitude, double range) {
    return RadialPotential({Term{Shape::gaussian, amplitude, range}});
}

RadialPotential RadialPotential::square_well(double amplitude, double radius) {
    return RadialPotential({Term{Shape::square_well, amplitude, radius}});
}

RadialPotential RadialPotential::exponential(double amplitude, double range) {
    return RadialPotential({Term{Shape::exponential, amplitude, range}});
}

RadialPotential RadialPotential::mix(std::span<const RadialPotential> parts) {
    std::vector<Term> all;
    for (const RadialPotential& p : parts) {
        all.insert(all.end(), p.terms_.begin(), p.terms_.end());
    }
    return RadialPotential(std::move(all));
}

RadialPotential RadialPotential::parse(std::string_view text) {
    std::vector<Term> terms;
    parse_into(text, terms);
    return RadialPotential(std::move(terms));
}

std::string RadialPotential::spec() const {
    if (terms_.empty()) {
        return "zero";
    }
    if (terms_.size() == 1) {
        return term_spec(terms_.front());
    }
    std::string out = "mix:[";
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (i > 0) {
            out += ';';
        }
        out += term_spec(terms_[i]);
    }
    return out + "]";
}

bool RadialPotential::is_zero() const noexcept {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const Term& t) { return t.amplitude == 0.0; });
}

double RadialPotential::value(double r) const {
    double sum = 0.0;
    for (const Term& t : terms_) {
        sum += term_value(t, r);
    }
    return sum;
}

double RadialPotential::fourier(double k) const {
    k = std::abs(k);
    double sum = 0.0;
    for (const Term& t : terms_) {
        sum += term_fourier(t, k);
    }
    return sum;
}

double RadialPotential::fourier_numeric(double k) const {
    if (terms_.empty()) {
        return 0.0;
    }
    k = std::abs(k);
    const double extent = radial_extent(1e-20);
    double width = 0.25 * min_length();
    if (k > 0.0) {
        width = std::min(width, 1.0 / k);
    }
    if (k == 0.0) {
        return kFourierNorm * 4.0 * kPi *
               radial_quadrature(*this, extent, width, [&](double r) { return r * r * value(r); });
    }
    const double s = radial_quadrature(*this, extent, width,
                                       [&](double r) { return r * value(r) * std::sin(k * r); });
    return kFourierNorm * 4.0 * kPi * s / k;
}

double RadialPotential::fourier_bound() const {
    double sum = 0.0;
    for (const Term& t : terms_) {
        sum += term_abs_integral(t);
    }
    return kFourierNorm * sum;
}

double RadialPotential::min_length() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Term& t : terms_) {
        m = std::min(m, t.length);
    }
    return terms_.empty() ? 1.0 : m;
}

double RadialPotential::max_length() const {
    double m = 0.0;
    for (const Term& t : terms_) {
        m = std::max(m, t.length);
    }
    return terms_.empty() ? 1.0 : m;
}

double RadialPotential::radial_extent(double rel) const {
    double extent = 0.0;
    for (const Term& t : terms_) {
        switch (t.shape) {
            case Shape::gaussian:
                extent = std::max(extent, t.length * std::sqrt(std::log(1.0 / rel)));
                break;
            case Shape::exponential:
                extent = std::max(extent, t.length * std::log(1.0 / rel));
                break;
            case Shape::square_well:
                extent = std::max(extent, t.length);
                break;
        }
    }
    return terms_.empty() ? 1.0 : extent;
}

double RadialPotential::momentum_extent(double rel) const {
    const double bound = fourier_bound();
    if (terms_.empty() || bound == 0.0) {
        return 0.0;
    }
    const double threshold = rel * bound / static_cast<double>(terms_.size());
    double k_max = 0.0;
    for (const Term& t : terms_) {
        const double a = t.length;
        const double c = kFourierNorm * term_abs_integral(t);
        if (c <= threshold) {
            continue;
        }
        switch (t.shape) {
            case Shape::gaussian:
                // c e^{-k^2 a^2 / 4}
                k_max = std::max(k_max, 2.0 * std::sqrt(std::log(c / threshold)) / a);
                break;
            case Shape::exponential:
                // c / (1 + k^2 a^2)^2
                k_max = std::max(k_max, std::sqrt(std::max(0.0, std::sqrt(c / threshold) - 1.0)) / a);
                break;
            case Shape::square_well: {
                // |V^| <= 3 c (1 + x) / x^3, x = k a
                const double ratio = 3.0 * c / threshold;
                double x = std::cbrt(ratio);
                for (int it = 0; it < 60; ++it) {
                    x = std::cbrt(ratio * (1.0 + x));
                }
                k_max = std::max(k_max, x / a);
                break;
            }
        }
    }
    return k_max;
}

std::vector<double> RadialPotential::radial_breakpoints() const {
    std::vector<double> b;
    for (const Term& t : terms_) {
        if (t.shape == Shape::square_well) {
            b.push_back(t.length);
        }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

bool RadialPotential::fourier_nonpositive_closed_form() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) {
        return t.amplitude <= 0.0 &&
               (t.shape == Shape::gaussian || t.shape == Shape::exponential);
    });
}

double fourier_transform(const RadialPotential& v, double k) { return v.fourier(k); }

double angular_kernel_fixed(const RadialPotential& v, int l, double p, double q, int order) {
    const numerics::GaussRule& rule = numerics::gauss_legendre(order);
    const double d = p - q;
    const double d2 = d * d;
    const double pq2 = 2.0 * (p * q);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double arg = std::sqrt(d2 + pq2 * rule.one_minus[k]);
        sum += rule.weights[k] * v.fourier(arg) * numerics::legendre_p(l, rule.nodes[k]);
    }
    return kFourierNorm * 2.0 * kPi * sum;
}

double angular_kernel(const RadialPotential& v, int l, double p, double q, int order) {
    if (l < 0) {
        throw ParameterError("angular_kernel: l must be nonnegative");
    }
    const double scale = kFourierNorm * 4.0 * kPi * v.fourier_bound();
    double prev = angular_kernel_fixed(v, l, p, q, order);
    while (order < 2048) {
        order *= 2;
        const double next = angular_kernel_fixed(v, l, p, q, order);
        if (std::abs(next - prev) <= 1e-11 * scale) {
            return next;
        }
        prev = next;
    }
    return prev;
}

int select_legendre_order(const RadialPotential& v, double p_max, int l_max, int start) {
    const double scale = kFourierNorm * 4.0 * kPi * v.fourier_bound();
    if (scale == 0.0) {
        return start;
    }
    const double probes[][2] = {{p_max, p_max}, {p_max, 0.5 * p_max}, {p_max, 0.1 * p_max}};
    int order = start;
    while (order < 2048) {
        bool agree = true;
        for (const auto& pq : probes) {
            for (int l = 0; l <= l_max && agree; ++l) {
                const double a = angular_kernel_fixed(v, l, pq[0], pq[1], order);
                const double b = angular_kernel_fixed(v, l, pq[0], pq[1], 2 * order);
                agree = std::abs(a - b) <= 1e-11 * scale;
            }
        }
        if (agree) {
            return order;
        }
        order *= 2;
    }
    return order;
}

std::vector<numerics::Matrix> channel_kernels(const RadialPotential& v,
                                              std::span<const double> momenta,
                                              std::span<const int> channels, int order) {
    const auto n = static_cast<Eigen::Index>(momenta.size());
    std::vector<numerics::Matrix> out(channels.size(), numerics::Matrix::Zero(n, n));
    if (v.terms().empty()) {
        return out;
    }
    const numerics::GaussRule& rule = numerics::gauss_legendre(order);
    const std::size_t m = rule.size();
    // weights * P_l(t_k) * (2 pi)^{-3/2} 2 pi, per channel
    std::vector<std::vector<double>> lw(channels.size(), std::vector<double>(m));
    for (std::size_t c = 0; c < channels.size(); ++c) {
        for (std::size_t k = 0; k < m; ++k) {
            lw[c][k] = kFourierNorm * 2.0 * kPi * rule.weights[k] *
                       numerics::legendre_p(channels[c], rule.nodes[k]);
        }
    }
    // Rows are independent; interleaved row assignment balances the triangular workload.
    auto fill_rows = [&](unsigned first, unsigned stride) {
        std::vector<double> vk(m);
        for (Eigen::Index i = first; i < n; i += stride) {
            const double p = momenta[i];
            for (Eigen::Index j = i; j < n; ++j) {
                const double q = momenta[j];
                const double d = p - q;
                const double d2 = d * d;
                const double pq2 = 2.0 * (p * q);
                for (std::size_t k = 0; k < m; ++k) {
                    vk[k] = v.fourier(std::sqrt(d2 + pq2 * rule.one_minus[k]));
                }
                for (std::size_t c = 0; c < channels.size(); ++c) {
                    double sum = 0.0;
                    for (std::size_t k = 0; k < m; ++k) {
                        sum += lw[c][k] * vk[k];
                    }
                    out[c](i, j) = sum;
                    out[c](j, i) = sum;
                }
            }
        }
    };
    const unsigned workers = std::clamp<unsigned>(
        std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(n / 32)), 1u,
        16u);
    if (workers == 1) {
        fill_rows(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(fill_rows, w, workers);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return out;
}

IntegrabilityReport integrability_report(const RadialPotential& v) {
    IntegrabilityReport rep;
    if (v.terms().empty()) {
        rep.fourier_nonpositive = true;
        return rep;
    }
    const double extent = v.radial_extent(1e-20);
    const double width = 0.25 * v.min_length();
    auto shell = [&](auto&& g) {
        return 4.0 * kPi *
               radial_quadrature(v, extent, width, [&](double r) { return r * r * g(r); });
    };
    rep.integral = shell([&](double r) { return v.value(r); });
    rep.abs_integral = shell([&](double r) { return std::abs(v.value(r)); });
    rep.l32_norm = std::pow(shell([&](double r) { return std::pow(std::abs(v.value(r)), 1.5); }),
                            2.0 / 3.0);
    rep.weight_decay_integral =
        shell([&](double r) { return std::pow(std::abs(v.value(r)) * r, 1.2); });
    // Every catalog shape has an integrable tail; a tail that still carries weight at the
    // truncation radius is reported as divergent.
    const double tail = 4.0 * kPi * extent * extent * std::abs(v.value(extent)) * extent;
    rep.l1_finite = std::isfinite(rep.abs_integral) && tail <= 1e-8 * rep.abs_integral;
    rep.l32_finite = std::isfinite(rep.l32_norm);
    rep.weight_decay = std::isfinite(rep.weight_decay_integral);
    if (!rep.l1_finite) {
        rep.abs_integral = std::numeric_limits<double>::infinity();
    }
    rep.has_negative_integral = rep.integral < 0.0;
    rep.fourier_at_zero = v.fourier(0.0);
    rep.identity_error = std::abs(rep.integral - rep.fourier_at_zero / kFourierNorm);

    if (v.fourier_nonpositive_closed_form()) {
        rep.fourier_nonpositive = true;
    } else {
        const double k_top = 40.0 / v.min_length();
        const double tol = 1e-14 * v.fourier_bound();
        rep.fourier_nonpositive = true;
        for (int i = 0; i < 4096; ++i) {
            if (v.fourier(k_top * i / 4095.0) > tol) {
                rep.fourier_nonpositive = false;
                break;
            }
        }
    }
    return rep;
}

double default_cutoff(const RadialPotential& v, double mu) {
    const double kf = std::sqrt(mu);
    const double tail = std::min(v.momentum_extent(1e-12), 200.0 / v.min_length());
    return std::max(3.0 * kf, kf + tail);
}

}  // namespace bcs::potentials
