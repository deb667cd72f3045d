#pragma once

// Sum-of-uniforms generator: chains of uniform(0,1) variates where each
// adjacent pair carries a prescribed correlation. A step adds an independent
// U(0,c) increment to the previous variate (or its reflection for negative
// correlation) and maps the sum through its exact CDF, so marginals stay
// uniform while c controls the adjacent correlation.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fptmc/rng.hpp"

namespace fptmc::sou {

namespace detail {
// |rho| below this is treated as independence; the increment range c would
// have to diverge to realize it.
constexpr double kIndependenceCutoff = 0.005;

// Forward map of the Chen relationship on the magnitude scale.
inline double rho_from_c(double c) {
    if (c >= 1.0) return 1.0 / c - 0.3 / (c * c);
    return 1.0 - 0.5 * c * c + 0.2 * c * c * c;
}
}  // namespace detail

struct SouParam {
    double c = 0.0;            // increment range; unused when independent
    double rho_target = 0.0;   // signed target correlation
    bool negative = false;
    bool independent = false;
};

// Invert the piecewise relationship between the increment range c and the
// adjacent correlation: |rho| = 1/c - 0.3/c^2 on c >= 1 (|rho| <= 0.7) and
// |rho| = 1 - 0.5c^2 + 0.2c^3 on 0 < c <= 1 (|rho| >= 0.7). The two branches
// agree exactly at |rho| = 0.7, c = 1.
inline SouParam rho_to_c(double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw std::invalid_argument("rho_to_c: |rho| must be < 1");
    }
    SouParam p;
    p.rho_target = rho;
    p.negative = rho < 0.0;
    const double r = std::abs(rho);
    if (r < detail::kIndependenceCutoff) {
        p.independent = true;
        return p;
    }
    if (r <= 0.7) {
        // Larger root of r*c^2 - c + 0.3 = 0, which lies on c >= 1.
        p.c = (1.0 + std::sqrt(1.0 - 1.2 * r)) / (2.0 * r);
    } else {
        // The cubic branch is strictly decreasing on (0, 1]; bisect.
        double lo = 0.0, hi = 1.0;
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            if (detail::rho_from_c(mid) > r) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        p.c = 0.5 * (lo + hi);
    }
    return p;
}

// Exact CDF of Z = U(0,1) + U(0,c), piecewise quadratic/linear on [0, 1+c].
inline double sou_cdf(double z, double c) {
    if (!(c > 0.0)) throw std::domain_error("sou_cdf: c must be positive");
    if (z < 0.0 || z > 1.0 + c) throw std::domain_error("sou_cdf: z outside [0, 1+c]");
    if (c >= 1.0) {
        if (z <= 1.0) return z * z / (2.0 * c);
        if (z <= c) return (2.0 * z - 1.0) / (2.0 * c);
        const double w = 1.0 + c - z;
        return 1.0 - w * w / (2.0 * c);
    }
    if (z <= c) return z * z / (2.0 * c);
    if (z <= 1.0) return (2.0 * z - c) / 2.0;
    const double w = 1.0 + c - z;
    return 1.0 - w * w / (2.0 * c);
}

// One chain step: correlate a fresh uniform with y_prev at the prescribed
// level. Marginally uniform by the probability integral transform.
inline double sou_next(double y_prev, const SouParam& param, RandomStream& rng) {
    if (param.independent) return rng.u01();
    const double w = rng.uniform(0.0, param.c);
    const double z = param.negative ? (1.0 - y_prev) + w : y_prev + w;
    return sou_cdf(z, param.c);
}

inline double sou_next(double y_prev, double rho, RandomStream& rng) {
    return sou_next(y_prev, rho_to_c(rho), rng);
}

// Chain of len(rhos)+1 uniforms; rhos[k] is the target correlation of
// positions k and k+1. Only adjacent correlations are controlled.
inline std::vector<double> sou_chain(const std::vector<double>& rhos, RandomStream& rng) {
    std::vector<double> ys;
    ys.reserve(rhos.size() + 1);
    ys.push_back(rng.u01());
    for (double rho : rhos) ys.push_back(sou_next(ys.back(), rho, rng));
    return ys;
}

}  // namespace fptmc::sou
