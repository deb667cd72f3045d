#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <optional>

#include "fptmc/bridge.hpp"
#include "fptmc/rng.hpp"

using namespace fptmc;
using bridge::InterjumpSegment;

namespace {

InterjumpSegment make_seg(double a, double b, double tau, double sigma = 1.0, double mu = 0.0,
                          double level = 0.0) {
    // Endpoints given as distances above a constant boundary at `level`.
    InterjumpSegment seg;
    seg.t_start = 0.0;
    seg.t_end = tau;
    seg.x_start = level + a;
    seg.x_end = level + b;
    seg.mu = mu;
    seg.sigma = sigma;
    seg.threshold = Threshold{0.0, level};
    return seg;
}

// Brute-force estimate of the bridge staying above the boundary: exact
// sequential conditional sampling of the pinned bridge on an n-step grid.
double bridge_survival_mc(double a, double b, double tau, double sigma, int n_steps,
                          int n_paths, RandomStream& rng) {
    const double dt = tau / n_steps;
    int above = 0;
    for (int p = 0; p < n_paths; ++p) {
        double x = a;
        bool crossed = x <= 0.0 || b <= 0.0;
        for (int k = 1; k < n_steps && !crossed; ++k) {
            const double remaining = tau - (k - 1) * dt;
            const double mean = x + (b - x) * dt / remaining;
            const double var = sigma * sigma * dt * (remaining - dt) / remaining;
            x = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
            crossed = x <= 0.0;
        }
        if (!crossed) ++above;
    }
    return static_cast<double>(above) / n_paths;
}

// Adaptive Simpson quadrature.
double simpson(const std::function<double(double)>& f, double lo, double hi, double f_lo,
               double f_mid, double f_hi, double eps, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid);
    const double rmid = 0.5 * (mid + hi);
    const double f_lmid = f(lmid);
    const double f_rmid = f(rmid);
    const double whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
    const double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lmid + f_mid);
    const double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rmid + f_hi);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps * (1.0 + std::abs(left + right))) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson(f, lo, mid, f_lo, f_lmid, f_mid, eps * 0.5, depth - 1)
         + simpson(f, mid, hi, f_mid, f_rmid, f_hi, eps * 0.5, depth - 1);
}

double integrate(const std::function<double(double)>& f, double lo, double hi, double eps) {
    const double mid = 0.5 * (lo + hi);
    return simpson(f, lo, hi, f(lo), f(mid), f(hi), eps, 40);
}

double integrate_crossing_density(const InterjumpSegment& seg, double rel_eps = 1e-7) {
    const double tau = seg.t_end - seg.t_start;
    const double inset = 1e-9 * tau;
    auto f = [&](double s) { return bridge::crossing_density(seg, s); };
    return integrate(f, seg.t_start + inset, seg.t_end - inset, rel_eps);
}

}  // namespace

TEST_CASE("survival_probability closed form") {
    SECTION("bridge starting on the boundary cannot stay above") {
        CHECK(bridge::survival_probability(make_seg(0.0, 1.0, 1.0)) == 0.0);
    }
    SECTION("bridge ending at or below the boundary has crossed") {
        CHECK(bridge::survival_probability(make_seg(1.0, 0.0, 1.0)) == 0.0);
        CHECK(bridge::survival_probability(make_seg(1.0, -0.5, 1.0)) == 0.0);
    }
    SECTION("direct evaluation, ab/(tau sigma^2) = 10") {
        CHECK(bridge::survival_probability(make_seg(2.0, 5.0, 1.0))
              == Catch::Approx(1.0 - std::exp(-20.0)).epsilon(1e-12));
    }
    SECTION("domain errors") {
        CHECK_THROWS_AS(bridge::survival_probability(make_seg(1.0, 1.0, 0.0)), std::domain_error);
        CHECK_THROWS_AS(bridge::survival_probability(make_seg(1.0, 1.0, 1.0, 0.0)), std::domain_error);
    }
    SECTION("decreases as either endpoint approaches the boundary") {
        double prev = 0.0;
        for (double a : {0.25, 0.5, 1.0, 2.0}) {
            const double p = bridge::survival_probability(make_seg(a, 1.0, 1.0));
            CHECK(p > prev);
            prev = p;
        }
        prev = 0.0;
        for (double b : {0.25, 0.5, 1.0, 2.0}) {
            const double p = bridge::survival_probability(make_seg(1.0, b, 1.0));
            CHECK(p > prev);
            prev = p;
        }
    }
}

TEST_CASE("survival_probability agrees with a discretized-bridge simulation") {
    RandomStream rng(101, 0);
    for (double a : {0.5, 1.5}) {
        for (double b : {0.5, 1.5}) {
            for (double tau : {0.5, 2.0}) {
                const double exact = bridge::survival_probability(make_seg(a, b, tau));
                const int n_paths = 20000;
                const double mc = bridge_survival_mc(a, b, tau, 1.0, 2000, n_paths, rng);
                const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-6)
                                            / n_paths);
                // Discrete monitoring misses excursions, so allow the known
                // upward bias on top of three standard errors.
                const double bias = 0.6 * std::sqrt(tau / 2000.0);
                CHECK(std::abs(mc - exact) < 3.0 * se + bias);
            }
        }
    }
}

TEST_CASE("crossing_density behaviour") {
    SECTION("far-from-boundary segment has negligible density") {
        const auto seg = make_seg(50.0, 50.0, 1.0);
        for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            CHECK(bridge::crossing_density(seg, s) < 1e-12);
        }
    }
    SECTION("endpoint evaluation is refused") {
        const auto seg = make_seg(1.0, 1.0, 1.0);
        CHECK_THROWS_AS(bridge::crossing_density(seg, 0.0), std::domain_error);
        CHECK_THROWS_AS(bridge::crossing_density(seg, 1.0), std::domain_error);
        CHECK_THROWS_AS(bridge::crossing_density(seg, -0.2), std::domain_error);
    }
    SECTION("first crossings of a symmetric segment skew early") {
        // Time reversal maps first passage to last passage, so the density is
        // front-loaded even for equal endpoints (the u^{-3/2} v^{-1/2} powers
        // are not symmetric).
        const auto seg = make_seg(1.2, 1.2, 2.0);
        for (double d : {0.1, 0.4, 0.8}) {
            CHECK(bridge::crossing_density(seg, 1.0 - d)
                  > bridge::crossing_density(seg, 1.0 + d));
        }
    }
    SECTION("density is nonnegative wherever evaluated") {
        RandomStream rng(55, 0);
        for (int k = 0; k < 300; ++k) {
            const auto seg = make_seg(rng.uniform(0.05, 3.0), rng.uniform(-1.0, 3.0),
                                      rng.uniform(0.1, 5.0), rng.uniform(0.2, 2.0),
                                      rng.uniform(-1.0, 1.0));
            const double s = rng.uniform(seg.t_start + 1e-6, seg.t_end - 1e-6);
            CHECK(bridge::crossing_density(seg, s) >= 0.0);
        }
    }
}

TEST_CASE("crossing density integrates to the crossing probability") {
    SECTION("surviving endpoints, no drift") {
        for (double a : {0.5, 1.0, 2.0}) {
            for (double b : {0.5, 2.0}) {
                const auto seg = make_seg(a, b, 1.5);
                const double q = 1.0 - bridge::survival_probability(seg);
                const double mass = integrate_crossing_density(seg);
                CHECK(mass == Catch::Approx(q).epsilon(1e-3));
            }
        }
    }
    SECTION("with drift") {
        for (double mu : {-0.8, 0.5}) {
            const auto seg = make_seg(1.0, 0.8, 2.0, 1.0, mu);
            const double q = 1.0 - bridge::survival_probability(seg);
            CHECK(integrate_crossing_density(seg) == Catch::Approx(q).epsilon(1e-3));
        }
    }
    SECTION("certain crossing: endpoint below the boundary") {
        const auto seg = make_seg(1.0, -0.7, 1.0);
        CHECK(integrate_crossing_density(seg) == Catch::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("crossing density shape matches a brute-force crossing-time histogram") {
    // Simulate pinned bridges, record the first crossing time (with the
    // between-grid excursion resolved by an exact Bernoulli draw), and
    // compare bin frequencies against the integrated density.
    const double a = 0.5, b = 0.8, tau = 1.0;
    const auto seg = make_seg(a, b, tau);
    const int n_steps = 2000, n_paths = 60000, n_bins = 10;
    const double dt = tau / n_steps;
    RandomStream rng(2718, 0);
    std::vector<int> hits(n_bins, 0);
    int crossings = 0;
    for (int p = 0; p < n_paths; ++p) {
        double x = a;
        double t_cross = -1.0;
        for (int k = 1; k <= n_steps; ++k) {
            double xn;
            if (k == n_steps) {
                xn = b;
            } else {
                const double remaining = tau - (k - 1) * dt;
                const double mean = x + (b - x) * dt / remaining;
                const double var = dt * (remaining - dt) / remaining;
                xn = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
            }
            if (xn <= 0.0) {
                t_cross = (k - 0.5) * dt;
                break;
            }
            const double expo = 2.0 * x * xn / dt;
            if (expo < 40.0 && rng.u01() < std::exp(-expo)) {
                t_cross = (k - 0.5) * dt;
                break;
            }
            x = xn;
        }
        if (t_cross >= 0.0) {
            ++crossings;
            ++hits[std::min(n_bins - 1, static_cast<int>(t_cross / tau * n_bins))];
        }
    }
    const double q = 1.0 - bridge::survival_probability(seg);
    CHECK(static_cast<double>(crossings) / n_paths
          == Catch::Approx(q).margin(3.0 * std::sqrt(q * (1 - q) / n_paths)));
    for (int bin = 0; bin < n_bins; ++bin) {
        const double lo = tau * bin / n_bins + (bin == 0 ? 1e-9 : 0.0);
        const double hi = tau * (bin + 1) / n_bins - (bin == n_bins - 1 ? 1e-9 : 0.0);
        const double expect = integrate([&](double s) { return bridge::crossing_density(seg, s); },
                                        lo, hi, 1e-7) / q;
        const double got = static_cast<double>(hits[bin]) / crossings;
        const double se = std::sqrt(std::max(expect * (1.0 - expect), 1e-9) / crossings);
        CHECK(got == Catch::Approx(expect).margin(4.0 * se + 2e-3));
    }
}

namespace {

// Literal transcription of the first-defaulting-jump predicate: the smallest
// j with all pre-jump values above the boundary up to j, all post-jump values
// above up to j-1, and the post-jump value at j at or below it.
std::optional<std::size_t> first_jump_predicate(const std::vector<double>& pre,
                                                const std::vector<double>& post,
                                                const std::vector<double>& level) {
    for (std::size_t j = 0; j < pre.size(); ++j) {
        bool ok = true;
        for (std::size_t k = 0; k <= j && ok; ++k) ok = pre[k] > level[k];
        for (std::size_t k = 0; k + 1 <= j && ok; ++k) ok = post[k] > level[k];
        if (ok && post[j] <= level[j]) return j + 1;
    }
    return std::nullopt;
}

JumpTimeline timeline_from(const std::vector<double>& pre, const std::vector<double>& post) {
    JumpTimeline tl;
    tl.horizon = static_cast<double>(pre.size()) + 1.0;
    for (std::size_t k = 0; k < pre.size(); ++k) tl.times.push_back(static_cast<double>(k + 1));
    tl.has_jump.assign(pre.size(), 1);
    tl.x0 = {1.0};
    tl.x_horizon = {1.0};
    tl.pre = {pre};
    tl.post = {post};
    return tl;
}

}  // namespace

TEST_CASE("first_jump_default_index") {
    const Threshold th{0.0, 0.0};
    SECTION("no jump takes the process below the threshold") {
        const auto tl = timeline_from({1.0, 2.0, 0.5}, {1.5, 1.8, 0.4});
        CHECK(bridge::first_jump_default_index(tl, 0, th) == std::nullopt);
        const auto tl2 = timeline_from({1.0, 2.0}, {1.5, 1.8});
        CHECK(bridge::first_jump_default_index(tl2, 0, th) == std::nullopt);
    }
    SECTION("single defining jump") {
        const auto tl = timeline_from({0.7}, {-0.1});
        CHECK(bridge::first_jump_default_index(tl, 0, th) == std::optional<std::size_t>(1));
    }
    SECTION("interior crossing before the jump suppresses the index") {
        // Second jump lands below, but the pre-jump value at the first
        // instant was already below: the interior sampler owns that crossing.
        const auto tl = timeline_from({-0.2, 0.8}, {0.5, -0.3});
        CHECK(bridge::first_jump_default_index(tl, 0, th) == std::nullopt);
    }
    SECTION("matches the literal predicate on random patterns") {
        RandomStream rng(77, 0);
        for (int rep = 0; rep < 10000; ++rep) {
            const std::size_t m = 1 + static_cast<std::size_t>(rng.u01() * 5);
            std::vector<double> pre(m), post(m), level(m, 0.0);
            for (std::size_t k = 0; k < m; ++k) {
                pre[k] = rng.uniform(-1.0, 1.0);
                post[k] = rng.uniform(-1.0, 1.0);
            }
            const auto tl = timeline_from(pre, post);
            CHECK(bridge::first_jump_default_index(tl, 0, th)
                  == first_jump_predicate(pre, post, level));
        }
    }
}

TEST_CASE("whole_horizon_density_weight") {
    using bridge::CrossingCase;
    SECTION("empty product") {
        CHECK(bridge::whole_horizon_density_weight(CrossingCase::Interior, 1, 0, {}) == 1.0);
    }
    SECTION("product of prior survivals") {
        CHECK(bridge::whole_horizon_density_weight(CrossingCase::Interior, 3, 0, {0.5, 0.5})
              == Catch::Approx(0.25));
    }
    SECTION("segments past the first defaulting jump carry nothing") {
        CHECK(bridge::whole_horizon_density_weight(CrossingCase::Interior, 3, 2, {0.5, 0.5, 0.5})
              == 0.0);
    }
    SECTION("atom includes its own segment's survival factor") {
        CHECK(bridge::whole_horizon_density_weight(CrossingCase::Atom, 2, 2, {0.5, 0.5})
              == Catch::Approx(0.25));
        CHECK(bridge::whole_horizon_density_weight(CrossingCase::Interior, 2, 2, {0.5, 0.5})
              == Catch::Approx(0.5));
        CHECK(bridge::whole_horizon_density_weight(CrossingCase::Atom, 1, 2, {0.5, 0.5}) == 0.0);
    }
}
