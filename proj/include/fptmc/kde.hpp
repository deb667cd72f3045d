#pragma once

// Weighted Gaussian kernel density estimation of the first-passage-time
// density, with the bandwidth chosen from a gamma approximation of the sample
// distribution, plus cumulative default-rate curves.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fptmc/mc.hpp"

namespace fptmc::kde {

// Gaussian kernel normalized to unit mass: K(h,u) = exp(-u^2/(h^2/2)) / (sqrt(pi/2)*h).
inline double kernel(double h, double u) {
    if (!(h > 0.0)) throw std::domain_error("kernel: bandwidth must be positive");
    return std::exp(-u * u / (0.5 * h * h)) / (1.25331413731550025120788264240552263 * h);
}

struct GammaFit {
    double alpha = 0.0;  // rate
    double beta = 0.0;   // shape, kept >= 3 so the roughness integral exists
};

// Weighted method-of-moments gamma fit: beta = m^2/v, alpha = m/v. A shape
// below 3 is clamped up and the rate refit so the mean m is preserved.
inline GammaFit fit_gamma(const std::vector<double>& times, const std::vector<double>& weights) {
    if (times.size() != weights.size()) throw std::invalid_argument("fit_gamma: size mismatch");
    if (times.size() < 2) throw std::invalid_argument("fit_gamma: need at least two samples");
    double wsum = 0.0, m = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        wsum += weights[k];
        m += weights[k] * times[k];
    }
    if (!(wsum > 0.0)) throw std::invalid_argument("fit_gamma: total weight must be positive");
    m /= wsum;
    double v = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        v += weights[k] * (times[k] - m) * (times[k] - m);
    }
    v /= wsum;
    if (!(v > 0.0)) throw std::invalid_argument("fit_gamma: degenerate sample (zero variance)");
    GammaFit fit{m / v, m * m / v};
    if (fit.beta < 3.0) {
        fit.beta = 3.0;
        fit.alpha = 3.0 / m;
    }
    return fit;
}

// Integral of the squared second derivative of the gamma density,
//   sum_{i=1..5} W_i * alpha^i * Gamma(2*beta - i) / (2^(2*beta-i) * Gamma(beta)^2),
// with W built from A = alpha^2, B = -2*alpha*(beta-1), C = (beta-1)(beta-2).
// For beta = 3 this collapses to 0.1875 * alpha^5.
inline double roughness_integral(const GammaFit& fit) {
    if (!(fit.beta >= 3.0)) throw std::domain_error("roughness_integral: beta must be >= 3");
    const double a = fit.alpha, b = fit.beta;
    const double A = a * a;
    const double B = -2.0 * a * (b - 1.0);
    const double C = (b - 1.0) * (b - 2.0);
    const double W[5] = {A * A, 2.0 * A * B, B * B + 2.0 * A * C, 2.0 * B * C, C * C};
    const double log_gb2 = 2.0 * std::lgamma(b);
    double sum = 0.0;
    for (int i = 1; i <= 5; ++i) {
        const double term = W[i - 1]
            * std::exp(i * std::log(a) + std::lgamma(2.0 * b - i)
                       - (2.0 * b - i) * 0.69314718055994530941723212145817657 - log_gb2);
        sum += term;
    }
    return sum;
}

// h_opt = (2 * n * sqrt(pi) * roughness)^(-1/5); n is the number of accepted
// first-passage samples, not the total run count.
inline double optimal_bandwidth(const GammaFit& fit, std::uint64_t n_samples) {
    if (n_samples < 1) throw std::invalid_argument("optimal_bandwidth: n_samples must be >= 1");
    return std::pow(2.0 * static_cast<double>(n_samples) * 1.77245385090551602729816748334114518
                        * roughness_integral(fit),
                    -0.2);
}

struct DensityEstimate {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    std::uint64_t n_samples = 0;   // accepted first-passage samples
    std::uint64_t run_count = 0;   // Monte Carlo cycles behind the estimate
    bool empty = false;            // no samples: density identically zero
};

inline std::vector<double> uniform_grid(double t_max, std::size_t points = 512) {
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k) {
        grid[k] = t_max * static_cast<double>(k) / static_cast<double>(points - 1);
    }
    return grid;
}

// f_hat(t) = (1/N) * sum over samples of weight * K(h, t - s), with N the run
// count; interior samples carry their stretched-uniform importance weight and
// jump atoms carry weight one.
inline DensityEstimate estimate_density(const mc::FptSampleSet& set, std::size_t firm,
                                        const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("estimate_density: grid too small");
    DensityEstimate est;
    est.grid = grid;
    est.density.assign(grid.size(), 0.0);
    est.run_count = set.run_count;
    const auto& samples = set.samples[firm];
    est.n_samples = samples.size();
    if (samples.empty()) {
        est.empty = true;
        return est;
    }
    std::vector<double> times, weights;
    times.reserve(samples.size());
    weights.reserve(samples.size());
    for (const auto& s : samples) {
        times.push_back(s.time);
        weights.push_back(s.weight);
    }
    double h;
    if (samples.size() >= 2) {
        try {
            h = optimal_bandwidth(fit_gamma(times, weights), samples.size());
        } catch (const std::invalid_argument&) {
            h = 0.1;  // all mass at one instant; any small bandwidth renders it
        }
    } else {
        h = 0.1;
    }
    est.bandwidth = h;
    const double inv_n = 1.0 / static_cast<double>(set.run_count);
    const double norm = inv_n / (1.25331413731550025120788264240552263 * h);
    const double inv_h2 = 1.0 / (0.5 * h * h);
    // Direct evaluation with an 8-bandwidth cutoff; contributions beyond it
    // are below 1e-27 of the kernel peak.
    const double cutoff = 8.0 * h;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        double acc = 0.0;
        for (std::size_t s = 0; s < times.size(); ++s) {
            const double u = t - times[s];
            if (u > cutoff || u < -cutoff) continue;
            acc += weights[s] * std::exp(-u * u * inv_h2);
        }
        est.density[k] = acc * norm;
    }
    return est;
}

// Trapezoid integral of the density from the start of the grid to t.
inline double cumulative_default_rate(const DensityEstimate& est, double t) {
    const auto& g = est.grid;
    if (t < g.front() - 1e-12 || t > g.back() + 1e-12) {
        throw std::domain_error("cumulative_default_rate: t outside the evaluation grid");
    }
    t = std::min(std::max(t, g.front()), g.back());
    double acc = 0.0;
    for (std::size_t k = 1; k < g.size(); ++k) {
        if (g[k] <= t) {
            acc += 0.5 * (est.density[k] + est.density[k - 1]) * (g[k] - g[k - 1]);
            if (g[k] == t) break;
        } else {
            // Partial cell up to t with linear interpolation of the density.
            const double frac = (t - g[k - 1]) / (g[k] - g[k - 1]);
            const double ft = est.density[k - 1] + frac * (est.density[k] - est.density[k - 1]);
            acc += 0.5 * (est.density[k - 1] + ft) * (t - g[k - 1]);
            break;
        }
    }
    return acc;
}

}  // namespace fptmc::kde
