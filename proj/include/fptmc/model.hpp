#pragma once

// Domain types for the reduced constant-coefficient multivariate jump-diffusion
// system: per-firm dynamics, affine default thresholds and the shared jump
// clock. No stochastic logic lives here.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fptmc {

// Affine default boundary D(t) = gamma*t + kappa_log in log-asset space.
struct Threshold {
    double gamma = 0.0;
    double kappa_log = 0.0;

    double at(double t) const { return gamma * t + kappa_log; }
};

enum class JumpKind { Normal };

struct FirmSpec {
    std::string name;
    double mu = 0.0;                 // drift per unit time
    std::vector<double> sigma_row;   // row of the system volatility matrix
    double jump_mean = 0.0;          // jump-size mean
    double jump_std = 0.0;           // jump-size standard deviation
    double x0 = 0.0;                 // initial log-value
    double kappa_log = 0.0;          // log liability level
    double gamma = 0.0;              // liability growth rate
    JumpKind jump_kind = JumpKind::Normal;

    Threshold threshold() const { return Threshold{gamma, kappa_log}; }
};

inline double threshold_at(const FirmSpec& firm, double t) {
    return firm.gamma * t + firm.kappa_log;
}

// Scalar volatility seen by one firm: Euclidean norm of its volatility row.
inline double effective_sigma(const FirmSpec& firm) {
    if (firm.sigma_row.empty()) {
        throw std::invalid_argument("effective_sigma: empty volatility row");
    }
    double ss = 0.0;
    for (double v : firm.sigma_row) ss += v * v;
    if (ss <= 0.0) {
        throw std::invalid_argument("effective_sigma: degenerate (all-zero) volatility row");
    }
    return std::sqrt(ss);
}

// Canonical two-firm volatility factor with sigma_12 = 0:
//   [[s1, 0], [rho12*s2, sqrt(1-rho12^2)*s2]]
// so that M*M^T = [[s1^2, rho12*s1*s2], [rho12*s1*s2, s2^2]].
inline std::array<std::array<double, 2>, 2>
build_sigma_matrix(double sigma1, double sigma2, double rho12) {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
        throw std::invalid_argument("build_sigma_matrix: volatilities must be positive");
    }
    if (!(std::abs(rho12) <= 1.0)) {
        throw std::invalid_argument("build_sigma_matrix: |rho12| must be <= 1");
    }
    return {{{sigma1, 0.0},
             {rho12 * sigma2, std::sqrt(1.0 - rho12 * rho12) * sigma2}}};
}

// Lower-triangular volatility rows for n firms with a common pairwise
// diffusion correlation. Reduces to build_sigma_matrix for n = 2.
inline std::vector<std::vector<double>>
build_sigma_rows(const std::vector<double>& sigmas, double rho) {
    const std::size_t n = sigmas.size();
    if (n == 0) throw std::invalid_argument("build_sigma_rows: no volatilities");
    if (!(std::abs(rho) <= 1.0)) {
        throw std::invalid_argument("build_sigma_rows: |rho| must be <= 1");
    }
    // Cholesky factor of the equicorrelation matrix, scaled per firm.
    std::vector<std::vector<double>> corr_l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double target = (i == j) ? 1.0 : rho;
            double sum = 0.0;
            for (std::size_t k = 0; k < j; ++k) sum += corr_l[i][k] * corr_l[j][k];
            if (i == j) {
                double d = target - sum;
                if (d <= 0.0) {
                    throw std::invalid_argument("build_sigma_rows: correlation matrix not positive definite");
                }
                corr_l[i][j] = std::sqrt(d);
            } else {
                corr_l[i][j] = (target - sum) / corr_l[j][j];
            }
        }
    }
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (!(sigmas[i] > 0.0)) {
            throw std::invalid_argument("build_sigma_rows: volatilities must be positive");
        }
        for (std::size_t j = 0; j <= i; ++j) rows[i][j] = sigmas[i] * corr_l[i][j];
    }
    return rows;
}

struct SystemSpec {
    std::vector<FirmSpec> firms;
    double lambda = 0.0;          // jump arrival intensity, shared by all firms
    double mean_interjump = 1.0;  // mean of exponential interjump (segmentation) times
    double horizon = 0.0;

    std::size_t n_firms() const { return firms.size(); }

    // Correlation of the diffusion parts of firms i and j from the volatility rows.
    double diffusion_correlation(std::size_t i, std::size_t j) const {
        const auto& ri = firms[i].sigma_row;
        const auto& rj = firms[j].sigma_row;
        double dot = 0.0;
        const std::size_t m = std::min(ri.size(), rj.size());
        for (std::size_t k = 0; k < m; ++k) dot += ri[k] * rj[k];
        return dot / (effective_sigma(firms[i]) * effective_sigma(firms[j]));
    }

    void validate() const {
        if (firms.empty()) throw std::invalid_argument("SystemSpec: no firms");
        if (!(horizon > 0.0)) throw std::invalid_argument("SystemSpec: horizon must be positive");
        if (!(mean_interjump > 0.0)) {
            throw std::invalid_argument("SystemSpec: mean_interjump must be positive");
        }
        if (lambda < 0.0) throw std::invalid_argument("SystemSpec: lambda must be nonnegative");
        // Jump instants are carved out of the shared segmentation clock, so the
        // arrival intensity cannot exceed the clock rate 1/mean_interjump.
        if (lambda * mean_interjump > 1.0 + 1e-12) {
            throw std::invalid_argument("SystemSpec: lambda * mean_interjump must be <= 1");
        }
        for (const auto& f : firms) {
            effective_sigma(f);  // throws on degenerate rows
            if (f.jump_std < 0.0) {
                throw std::invalid_argument("SystemSpec: jump_std must be nonnegative for firm " + f.name);
            }
            if (!(f.x0 > threshold_at(f, 0.0))) {
                throw std::invalid_argument("SystemSpec: firm " + f.name + " starts at or below its threshold");
            }
        }
    }
};

}  // namespace fptmc
