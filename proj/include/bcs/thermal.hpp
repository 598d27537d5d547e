#pragma once

#include <cmath>

namespace bcs {

/// Thermal kinetic symbol xi * coth(xi / 2T) with xi = p^2 - mu; reduces to |xi| at T = 0.
inline double thermal_symbol(double xi, double t) {
    if (t <= 0.0) {
        return std::abs(xi);
    }
    const double x = xi / (2.0 * t);
    const double ax = std::abs(x);
    if (ax < 1e-6) {
        // 2T (1 + x^2/3 - x^4/45)
        const double x2 = x * x;
        return 2.0 * t * (1.0 + x2 / 3.0 - x2 * x2 / 45.0);
    }
    if (ax > 40.0) {
        return std::abs(xi);
    }
    return xi / std::tanh(x);
}

/// tanh(E / 2T) / E, the occupation weight of the gap equation; 1/E at T = 0.
inline double pair_weight(double e, double t) {
    if (t <= 0.0) {
        return e > 0.0 ? 1.0 / e : 0.0;
    }
    const double x = e / (2.0 * t);
    if (x < 1e-6) {
        return (1.0 - x * x / 3.0) / (2.0 * t);
    }
    return std::tanh(x) / e;
}

}  // namespace bcs
