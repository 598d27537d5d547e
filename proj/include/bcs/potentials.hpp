#pragma once

#include "bcs/numerics.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bcs::potentials {

/// (2 pi)^(-3/2)
inline constexpr double kFourierNorm = 0.063493635934240969;

enum class Shape { gaussian, square_well, exponential };

/// One analytic radial term: amplitude (energy, negative = attractive) and a length.
struct Term {
    Shape shape = Shape::gaussian;
    double amplitude = 0.0;
    double length = 1.0;  // range for gaussian/exponential, radius for square_well
};

/// Radial pair interaction V(r) built from a sum of analytic terms.
///
/// A single term is one of the catalog shapes; several terms form a `mix`.
/// An empty term list is the zero potential.
class RadialPotential {
public:
    RadialPotential() = default;
    explicit RadialPotential(std::vector<Term> terms);

    static RadialPotential zero() { return RadialPotential{}; }
    static RadialPotential gaussian(double amplitude, double range);
    static RadialPotential square_well(double amplitude, double radius);
    static RadialPotential exponential(double amplitude, double range);
    static RadialPotential mix(std::span<const RadialPotential> parts);

    /// Parse `gaussian:amp=-5,range=1`, `square_well:amp=-2,radius=1.5`,
    /// `exponential:amp=-3,range=0.8`, `mix:[term;term;...]` or `zero`.
    static RadialPotential parse(std::string_view text);

    /// Canonical text form; parse(spec()) reproduces the potential exactly.
    std::string spec() const;

    const std::vector<Term>& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept;

    double value(double r) const;

    /// Closed-form transform (2 pi)^(-3/2) int V(x) e^{-ikx} dx of the radial function.
    double fourier(double k) const;

    /// Same transform by direct sine quadrature of the radial profile.
    double fourier_numeric(double k) const;

    /// Upper bound (2 pi)^(-3/2) int |V| on |V^(k)|.
    double fourier_bound() const;

    double min_length() const;
    double max_length() const;

    /// Radius beyond which |V(r)| <= rel * max|amplitude|.
    double radial_extent(double rel = 1e-18) const;

    /// Momentum beyond which |V^(k)| <= rel * fourier_bound() (envelope estimate).
    double momentum_extent(double rel) const;

    /// Radii where V is not smooth (square-well edges), ascending.
    std::vector<double> radial_breakpoints() const;

    /// True when every term has a transform known to be nonpositive everywhere.
    bool fourier_nonpositive_closed_form() const;

private:
    std::vector<Term> terms_;
};

/// V^(k); at k = 0 this is (2 pi)^(-3/2) int V.
double fourier_transform(const RadialPotential& v, double k);

inline constexpr int kDefaultLegendreOrder = 64;

/// Legendre projection (2 pi)^(-3/2) 2 pi int_{-1}^{1} V^(|p - q|) P_l(t) dt, t = cos angle(p, q).
///
/// The order starts at `order` and doubles until two successive values agree to
/// 1e-11 relative to the kernel scale.
double angular_kernel(const RadialPotential& v, int l, double p, double q,
                      int order = kDefaultLegendreOrder);

/// Kernel at a fixed Legendre order, no adaptivity.
double angular_kernel_fixed(const RadialPotential& v, int l, double p, double q, int order);

/// Legendre order for batch assembly on momenta up to p_max: doubled from `start`
/// until the most oscillatory pairs agree between successive orders.
int select_legendre_order(const RadialPotential& v, double p_max, int l_max,
                          int start = kDefaultLegendreOrder);

/// Symmetric matrices V_l(p_i, p_j), one for each requested channel, sharing the V^ evaluations.
std::vector<numerics::Matrix> channel_kernels(const RadialPotential& v,
                                              std::span<const double> momenta,
                                              std::span<const int> channels, int order);

struct IntegrabilityReport {
    double integral = 0.0;             // int V
    double abs_integral = 0.0;         // int |V|
    double l32_norm = 0.0;             // (int |V|^{3/2})^{2/3}
    double weight_decay_integral = 0.0;  // int (|V(x)| |x|)^{6/5}
    bool l1_finite = true;
    bool l32_finite = true;
    bool weight_decay = true;
    bool has_negative_integral = false;
    bool fourier_nonpositive = false;
    double fourier_at_zero = 0.0;
    double identity_error = 0.0;  // |int V - (2 pi)^{3/2} V^(0)|
};

IntegrabilityReport integrability_report(const RadialPotential& v);

/// Natural momentum cutoff for kernel work at chemical potential mu.
double default_cutoff(const RadialPotential& v, double mu);

}  // namespace bcs::potentials
