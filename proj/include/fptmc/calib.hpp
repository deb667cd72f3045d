#pragma once

// Parameter calibration against historical cumulative default-rate curves.
// The objective is the time-weighted curve misfit evaluated from a fixed-seed
// simulation (common random numbers make it a deterministic surrogate), and
// the minimizer is Nelder-Mead with box bounds enforced by reflection -- the
// gradient of a Monte Carlo objective is too noisy for quasi-Newton steps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fptmc/kde.hpp"
#include "fptmc/mc.hpp"
#include "fptmc/model.hpp"

namespace fptmc::calib {

struct HistoricalCurve {
    std::string label;
    std::vector<double> times;
    std::vector<double> rates;

    void validate() const {
        if (times.empty() || times.size() != rates.size()) {
            throw std::invalid_argument("HistoricalCurve: empty or mismatched series");
        }
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (!(times[k] > 0.0)) throw std::invalid_argument("HistoricalCurve: times must be positive");
            if (k > 0 && !(times[k] > times[k - 1])) {
                throw std::invalid_argument("HistoricalCurve: times must be strictly increasing");
            }
            if (rates[k] < 0.0 || rates[k] > 1.0) {
                throw std::invalid_argument("HistoricalCurve: rates must lie in [0,1]");
            }
            if (k > 0 && rates[k] < rates[k - 1] - 1e-12) {
                throw std::invalid_argument("HistoricalCurve: rates must be nondecreasing");
            }
        }
    }
};

inline double rmse(const std::vector<double>& model, const std::vector<double>& market) {
    if (model.empty() || model.size() != market.size()) {
        throw std::domain_error("rmse: lists must be nonempty and of equal length");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        acc += (model[k] - market[k]) * (model[k] - market[k]);
    }
    return std::sqrt(acc / static_cast<double>(model.size()));
}

struct ParamBounds {
    double lo = 0.0;
    double hi = 0.0;
};

struct CalibrationSpec {
    ParamBounds sigma{1e-4, 5.0};
    ParamBounds lambda{0.0, 5.0};
    ParamBounds jump_mean{-5.0, 5.0};
    ParamBounds jump_std{1e-4, 5.0};
    bool shared_lambda = true;      // fit lambda on the first curve, pin it for the rest
    std::uint64_t mc_runs = 50000;  // runs per objective evaluation
    std::uint64_t seed = 987654321; // common random numbers across evaluations
    unsigned workers = 1;
    std::size_t grid_points = 512;
    int max_iterations = 200;
    double simplex_tol = 1e-3;
};

// Time-weighted misfit of the simulated cumulative default rates against the
// historical curves: sum_i sqrt( sum_j ((P_i(t_j) - A_i(t_j)) / t_j)^2 ).
// Firms pair with curves by position. Deterministic for a fixed seed.
inline double objective(const SystemSpec& sys, const std::vector<HistoricalCurve>& curves,
                        std::uint64_t mc_runs, std::uint64_t seed, unsigned workers,
                        std::size_t grid_points = 512) {
    if (curves.size() != sys.firms.size()) {
        throw std::invalid_argument("objective: one curve per firm required");
    }
    const auto set = mc::simulate(sys, mc_runs, seed, workers);
    const auto grid = kde::uniform_grid(sys.horizon, grid_points);
    double total = 0.0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        curves[i].validate();
        const auto est = kde::estimate_density(set, i, grid);
        double acc = 0.0;
        for (std::size_t j = 0; j < curves[i].times.size(); ++j) {
            const double t = curves[i].times[j];
            if (t > sys.horizon + 1e-12) {
                throw std::invalid_argument("objective: curve point beyond the horizon");
            }
            const double p = est.empty ? 0.0 : kde::cumulative_default_rate(est, std::min(t, sys.horizon));
            const double gap = (p - curves[i].rates[j]) / t;
            acc += gap * gap;
        }
        total += std::sqrt(acc);
    }
    return total;
}

namespace detail {

inline double reflect_into(double v, const ParamBounds& b) {
    if (!(b.hi > b.lo)) return b.lo;
    for (int fold = 0; fold < 8 && (v < b.lo || v > b.hi); ++fold) {
        v = (v < b.lo) ? b.lo + (b.lo - v) : b.hi - (v - b.hi);
    }
    return std::clamp(v, b.lo, b.hi);
}

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    std::vector<double> trace;  // best objective after each iteration
    int iterations = 0;
};

// Standard Nelder-Mead with reflection/expansion/contraction/shrink and box
// bounds enforced by folding trial points back into the box.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, const std::vector<double>& step,
                                    const std::vector<ParamBounds>& bounds, double tol,
                                    int max_iter) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> xs;
    std::vector<double> fs;
    auto clip = [&](std::vector<double> x) {
        for (std::size_t k = 0; k < n; ++k) x[k] = reflect_into(x[k], bounds[k]);
        return x;
    };
    xs.push_back(clip(x0));
    for (std::size_t k = 0; k < n; ++k) {
        auto x = xs[0];
        x[k] += step[k];
        xs.push_back(clip(std::move(x)));
    }
    for (const auto& x : xs) fs.push_back(f(x));

    NelderMeadResult res;
    auto order = [&] {
        std::vector<std::size_t> idx(xs.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        std::vector<std::vector<double>> xs2;
        std::vector<double> fs2;
        for (auto k : idx) {
            xs2.push_back(xs[k]);
            fs2.push_back(fs[k]);
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t a = 1; a < xs.size(); ++a) {
            for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(xs[a][k] - xs[0][k]));
        }
        return d;
    };

    order();
    int it = 0;
    for (; it < max_iter; ++it) {
        if (diameter() < tol) break;
        std::vector<double> centroid(n, 0.0);
        for (std::size_t a = 0; a + 1 < xs.size(); ++a) {
            for (std::size_t k = 0; k < n; ++k) centroid[k] += xs[a][k];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto make = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + coef * (centroid[k] - xs.back()[k]);
            return clip(std::move(x));
        };
        auto xr = make(1.0);
        const double fr = f(xr);
        if (fr < fs[0]) {
            auto xe = make(2.0);
            const double fe = f(xe);
            if (fe < fr) {
                xs.back() = xe;
                fs.back() = fe;
            } else {
                xs.back() = xr;
                fs.back() = fr;
            }
        } else if (fr < fs[fs.size() - 2]) {
            xs.back() = xr;
            fs.back() = fr;
        } else {
            auto xc = make(-0.5);
            const double fc = f(xc);
            if (fc < fs.back()) {
                xs.back() = xc;
                fs.back() = fc;
            } else {
                for (std::size_t a = 1; a < xs.size(); ++a) {
                    for (std::size_t k = 0; k < n; ++k) {
                        xs[a][k] = xs[0][k] + 0.5 * (xs[a][k] - xs[0][k]);
                    }
                    fs[a] = f(xs[a]);
                }
            }
        }
        order();
        res.trace.push_back(fs[0]);
    }
    res.x = xs[0];
    res.fx = fs[0];
    res.iterations = it;
    return res;
}

}  // namespace detail

struct FirmFitTrace {
    std::string name;
    std::vector<double> best_objective;  // best-so-far value per iteration
};

struct CalibResult {
    SystemSpec fitted;
    double objective = 0.0;
    std::vector<FirmFitTrace> traces;
};

// Fit (sigma, lambda, jump_mean, jump_std) per firm against its curve,
// curve k against firm k. Firms are fitted one at a time as single-firm
// systems; with shared_lambda the first fit's lambda is pinned for the rest.
inline CalibResult calibrate(const SystemSpec& initial, const std::vector<HistoricalCurve>& curves,
                             const CalibrationSpec& spec) {
    if (curves.empty()) throw std::invalid_argument("calibrate: no curves");
    if (curves.size() != initial.firms.size()) {
        throw std::invalid_argument("calibrate: one curve per firm required");
    }
    CalibResult result;
    result.fitted = initial;
    double pinned_lambda = -1.0;

    for (std::size_t i = 0; i < curves.size(); ++i) {
        curves[i].validate();
        const bool fit_lambda = !spec.shared_lambda || i == 0;
        const FirmSpec& firm0 = initial.firms[i];

        SystemSpec single;
        single.horizon = initial.horizon;
        single.mean_interjump = initial.mean_interjump;
        single.lambda = initial.lambda;
        single.firms = {firm0};
        single.firms[0].sigma_row = {effective_sigma(firm0)};

        std::vector<HistoricalCurve> one_curve{curves[i]};
        auto eval = [&](const std::vector<double>& x) {
            SystemSpec candidate = single;
            candidate.firms[0].sigma_row = {x[0]};
            candidate.lambda = fit_lambda ? x[1] : pinned_lambda;
            candidate.firms[0].jump_mean = fit_lambda ? x[2] : x[1];
            candidate.firms[0].jump_std = fit_lambda ? x[3] : x[2];
            return objective(candidate, one_curve, spec.mc_runs, spec.seed, spec.workers,
                             spec.grid_points);
        };

        std::vector<double> x0, step;
        std::vector<ParamBounds> bounds;
        x0.push_back(effective_sigma(firm0));
        step.push_back(std::max(0.25 * x0[0], 0.02));
        bounds.push_back(spec.sigma);
        if (fit_lambda) {
            // The jump clock carves arrivals out of the segmentation clock, so
            // the feasible intensity is capped by 1/mean_interjump.
            ParamBounds lb = spec.lambda;
            lb.hi = std::min(lb.hi, 1.0 / initial.mean_interjump);
            x0.push_back(std::clamp(initial.lambda, lb.lo, lb.hi));
            step.push_back(std::max(0.25 * x0.back(), 0.02));
            bounds.push_back(lb);
        }
        x0.push_back(firm0.jump_mean);
        step.push_back(std::max(0.25 * std::abs(firm0.jump_mean), 0.05));
        bounds.push_back(spec.jump_mean);
        x0.push_back(firm0.jump_std);
        step.push_back(std::max(0.25 * firm0.jump_std, 0.05));
        bounds.push_back(spec.jump_std);

        auto nm = detail::nelder_mead(eval, x0, step, bounds, spec.simplex_tol,
                                      spec.max_iterations);

        result.fitted.firms[i].sigma_row = {nm.x[0]};
        if (fit_lambda) {
            pinned_lambda = nm.x[1];
            result.fitted.lambda = nm.x[1];
            result.fitted.firms[i].jump_mean = nm.x[2];
            result.fitted.firms[i].jump_std = nm.x[3];
        } else {
            result.fitted.firms[i].jump_mean = nm.x[1];
            result.fitted.firms[i].jump_std = nm.x[2];
        }
        result.objective += nm.fx;
        result.traces.push_back({firm0.name, nm.trace});
    }
    return result;
}

}  // namespace fptmc::calib
