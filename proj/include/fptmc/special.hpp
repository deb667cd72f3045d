#pragma once

// Small special-function kit: standard normal CDF and the modified Bessel
// function of the first kind at real nonnegative order. Everything is
// evaluated in long double internally; the fractional-order Bessel series is
// the only nonstandard piece and is cross-checked in tests against the
// half-order closed forms.

#include <cmath>
#include <stdexcept>
#include <string>

namespace fptmc {

// Series or iteration failed to converge; carries the partial result.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& msg, double partial)
        : std::runtime_error(msg), partial_(partial) {}
    double partial_sum() const { return partial_; }

private:
    double partial_;
};

namespace special {

inline long double norm_cdf_l(long double x) {
    return 0.5L * erfcl(-x / 1.41421356237309504880168872420969808L);
}

inline double norm_cdf(double x) { return static_cast<double>(norm_cdf_l(x)); }

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / 2.50662827463100050241576528481104525;
}

// exp(-x) * I_nu(x) via the ascending series
//   I_nu(x) = sum_k (x/2)^(2k+nu) / (k! * Gamma(k+nu+1)).
// Scaled terms are bounded by ~1/sqrt(2*pi*x), so the sum never overflows.
inline long double bessel_i_scaled_l(long double order, long double x) {
    if (!(order >= 0.0L)) throw std::domain_error("bessel_i: order must be >= 0");
    if (!(x > 0.0L)) throw std::domain_error("bessel_i: x must be > 0");
    const long double log_half_x = logl(0.5L * x);
    long double sum = 0.0L;
    const int max_k = 20000;
    for (int k = 0; k < max_k; ++k) {
        long double log_term = (2.0L * k + order) * log_half_x - x
                               - lgammal(k + 1.0L) - lgammal(k + order + 1.0L);
        long double term = expl(log_term);
        sum += term;
        // Terms grow until k ~ x/2, then decay superexponentially.
        if (k > 0.5L * x && term < 1e-19L * sum) return sum;
    }
    throw NumericError("bessel_i: series did not converge", static_cast<double>(sum * expl(x)));
}

inline double bessel_i_scaled(double order, double x) {
    return static_cast<double>(bessel_i_scaled_l(order, x));
}

// I_nu(x) itself. Accurate to better than 1e-10 relative for x <= 50; refuses
// arguments where exp(x) overflows (use the scaled form there).
inline double bessel_i(double order, double x) {
    if (x > 700.0) {
        throw std::overflow_error("bessel_i: argument too large for unscaled evaluation");
    }
    long double xl = x;
    return static_cast<double>(bessel_i_scaled_l(order, xl) * expl(xl));
}

}  // namespace special
}  // namespace fptmc
