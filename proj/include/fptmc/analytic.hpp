#pragma once

// Closed-form benchmarks for the diffusion-only (no-jump) model: single-firm
// default probability, two-firm joint default through the wedge/Bessel series,
// and the resulting default correlation. These are the reference values the
// Monte Carlo engine is measured against when jumps are switched off.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fptmc/special.hpp"

namespace fptmc::analytic {

// Initial buffer above the default point in volatility units,
// Z = (X(0) - kappa_log) / sigma.
struct StandardizedDistance {
    double z = 0.0;
};

// P(firm defaults by t) = 2 * N(-Z / sqrt(t)) for a driftless log-asset
// diffusion starting Z volatility-units above an absorbing level.
inline double default_probability(StandardizedDistance zd, double t) {
    if (!(t > 0.0)) throw std::domain_error("default_probability: t must be > 0");
    if (!(zd.z > 0.0)) throw std::domain_error("default_probability: z must be > 0");
    return static_cast<double>(2.0L * special::norm_cdf_l(-static_cast<long double>(zd.z) / sqrtl(t)));
}

// Polar coordinates of the two-firm problem: the pair (Z1, Z2) maps to a
// point (r0, theta0) inside a wedge of angle alpha whose boundary is the
// joint default set.
struct WedgeGeometry {
    long double alpha;
    long double theta0;
    long double r0;
};

inline WedgeGeometry wedge_geometry(double z1, double z2, double rho) {
    const long double r = rho;
    const long double s = sqrtl(1.0L - r * r);
    long double alpha;
    if (r < 0.0L) {
        alpha = atanl(-s / r);
    } else if (r == 0.0L) {
        alpha = 1.57079632679489661923132169163975144L;  // pi/2, limit of the branch below
    } else {
        alpha = 3.14159265358979323846264338327950288L + atanl(-s / r);
    }
    const long double den = static_cast<long double>(z1) - r * static_cast<long double>(z2);
    const long double num = static_cast<long double>(z2) * s;
    long double theta0;
    if (den > 0.0L) {
        theta0 = atanl(num / den);
    } else if (den == 0.0L) {
        theta0 = 1.57079632679489661923132169163975144L;
    } else {
        theta0 = 3.14159265358979323846264338327950288L + atanl(num / den);
    }
    return {alpha, theta0, static_cast<long double>(z2) / sinl(theta0)};
}

namespace detail {
constexpr double kSeriesTol = 1e-12;   // stop once the term envelope drops below this
constexpr int kMaxOddTerms = 2001;
}  // namespace detail

// P(at least one of two correlated diffusions defaults by t), via the odd-n
// sine/Bessel series over the wedge. The result is clamped to the sharp
// bounds [max(P1,P2), min(1, P1+P2)].
inline double union_default_probability(StandardizedDistance z1, StandardizedDistance z2,
                                        double rho, double t) {
    if (!(t > 0.0)) throw std::domain_error("union_default_probability: t must be > 0");
    if (!(std::abs(rho) < 1.0)) {
        throw std::domain_error("union_default_probability: |rho| must be < 1");
    }
    if (!(z1.z > 0.0) || !(z2.z > 0.0)) {
        throw std::domain_error("union_default_probability: distances must be > 0");
    }
    const auto w = wedge_geometry(z1.z, z2.z, rho);
    const long double pi = 3.14159265358979323846264338327950288L;
    const long double x = w.r0 * w.r0 / (4.0L * t);
    // Work with exp(-x)*I_nu(x) so large x stays finite; the prefactor keeps
    // its exponential explicitly cancelled.
    const long double pref = 2.0L * w.r0 / sqrtl(2.0L * pi * t);
    long double sum = 0.0L;
    bool converged = false;
    for (int n = 1; n <= 2 * detail::kMaxOddTerms; n += 2) {
        const long double half_ratio = 0.5L * (n * pi / w.alpha);
        const long double bracket = special::bessel_i_scaled_l(half_ratio + 0.5L, x)
                                    + special::bessel_i_scaled_l(half_ratio - 0.5L, x);
        const long double envelope = pref * bracket / n;  // |sin| <= 1 bound on the term
        sum += envelope * sinl(n * pi * w.theta0 / w.alpha);
        if (n > 5 && envelope < detail::kSeriesTol) {
            converged = true;
            break;
        }
    }
    const long double survival = sum;  // already includes the prefactor
    if (!converged) {
        throw NumericError("union_default_probability: series did not converge",
                           static_cast<double>(1.0L - survival));
    }
    const double p1 = default_probability(z1, t);
    const double p2 = default_probability(z2, t);
    double p_union = static_cast<double>(1.0L - survival);
    p_union = std::max(p_union, std::max(p1, p2));
    p_union = std::min(p_union, std::min(1.0, p1 + p2));
    return p_union;
}

// Pearson correlation of two default indicators from their marginals and the
// joint default probability.
inline double default_correlation(double p_i, double p_j, double p_ij) {
    if (!(p_i > 0.0 && p_i < 1.0 && p_j > 0.0 && p_j < 1.0)) {
        throw std::domain_error("default_correlation: degenerate marginal probability");
    }
    if (p_ij < 0.0 || p_ij > std::min(p_i, p_j) + 1e-15) {
        throw std::domain_error("default_correlation: joint probability out of range");
    }
    return (p_ij - p_i * p_j) / std::sqrt(p_i * (1.0 - p_i) * p_j * (1.0 - p_j));
}

namespace detail {
// Below this marginal level the series truncation floor (kSeriesTol on the
// union probability) no longer resolves the correlation quotient; the true
// value also vanishes there (Gaussian tails are asymptotically independent),
// so report 0.
constexpr double kDegenerateMarginal = 1e-8;
}  // namespace detail

// Default correlation of two firms by horizon t: composes the marginals, the
// union probability, and the indicator-correlation identity
//   rho_ij = (P1 + P2 - P1*P2 - P_union) / sqrt(P1(1-P1)P2(1-P2)).
inline double pairwise_default_correlation(StandardizedDistance z1, StandardizedDistance z2,
                                           double rho, double t) {
    const long double p1 = 2.0L * special::norm_cdf_l(-static_cast<long double>(z1.z) / sqrtl(t));
    const long double p2 = 2.0L * special::norm_cdf_l(-static_cast<long double>(z2.z) / sqrtl(t));
    if (p1 < detail::kDegenerateMarginal || p2 < detail::kDegenerateMarginal) return 0.0;
    const long double pu = union_default_probability(z1, z2, rho, t);
    const long double num = p1 + p2 - p1 * p2 - pu;
    const long double den = sqrtl(p1 * (1.0L - p1) * p2 * (1.0L - p2));
    return static_cast<double>(num / den);
}

}  // namespace fptmc::analytic
