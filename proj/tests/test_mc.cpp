#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "fptmc/analytic.hpp"
#include "fptmc/mc.hpp"
#include "fptmc/model.hpp"

using namespace fptmc;

namespace {

SystemSpec single_firm(double sigma, double lambda, double jump_mean, double jump_std,
                       double x0 = 2.0, double mu = -0.001, double gamma = -0.001,
                       double horizon = 10.0) {
    SystemSpec sys;
    sys.horizon = horizon;
    sys.mean_interjump = 1.0;
    sys.lambda = lambda;
    FirmSpec f;
    f.name = "F";
    f.mu = mu;
    f.gamma = gamma;
    f.x0 = x0;
    f.kappa_log = 0.0;
    f.sigma_row = {sigma};
    f.jump_mean = jump_mean;
    f.jump_std = jump_std;
    sys.firms = {f};
    return sys;
}

SystemSpec two_firms(double s1, double s2, double rho, double lambda, double jm1, double js1,
                     double jm2, double js2, double x0 = 2.0) {
    SystemSpec sys;
    sys.horizon = 10.0;
    sys.mean_interjump = 1.0;
    sys.lambda = lambda;
    const auto rows = build_sigma_rows({s1, s2}, rho);
    for (int i = 0; i < 2; ++i) {
        FirmSpec f;
        f.name = i == 0 ? "F1" : "F2";
        f.mu = -0.001;
        f.gamma = -0.001;
        f.x0 = x0;
        f.kappa_log = 0.0;
        f.sigma_row = rows[i];
        f.jump_mean = i == 0 ? jm1 : jm2;
        f.jump_std = i == 0 ? js1 : js2;
        sys.firms.push_back(f);
    }
    return sys;
}

}  // namespace

TEST_CASE("generate_jump_times") {
    SECTION("mean count matches the clock rate") {
        RandomStream rng(3, 0);
        double total = 0.0;
        const int reps = 100000;
        for (int k = 0; k < reps; ++k) {
            total += static_cast<double>(mc::generate_jump_times(1.0, 10.0, rng).size());
        }
        CHECK(total / reps == Catch::Approx(10.0).margin(0.1));
    }
    SECTION("horizon shorter than the first gap leaves no instants") {
        RandomStream rng(4, 0);
        CHECK(mc::generate_jump_times(1e12, 1.0, rng).empty());
    }
    SECTION("bit-exact reproducibility") {
        RandomStream a(17, 5), b(17, 5);
        const auto ta = mc::generate_jump_times(0.7, 10.0, a);
        const auto tb = mc::generate_jump_times(0.7, 10.0, b);
        REQUIRE(ta.size() == tb.size());
        for (std::size_t k = 0; k < ta.size(); ++k) CHECK(ta[k] == tb[k]);
        RandomStream c(17, 6);
        CHECK(mc::generate_jump_times(0.7, 10.0, c) != ta);
    }
    SECTION("invalid mean") {
        RandomStream rng(1, 0);
        CHECK_THROWS_AS(mc::generate_jump_times(0.0, 1.0, rng), std::invalid_argument);
    }
}

TEST_CASE("evolve_interjump") {
    SECTION("zero volatility reduces to the drift") {
        auto sys = single_firm(0.5, 0.0, 0.0, 0.0);
        sys.firms[0].sigma_row = {0.0};  // bypass validation: direct call
        RandomStream rng(9, 0);
        const auto x = mc::evolve_interjump({2.0}, 1.0, 3.0, sys, rng);
        CHECK(x[0] == Catch::Approx(2.0 - 0.001 * 2.0).margin(1e-15));
    }
    SECTION("cross-firm increment correlation matches the volatility factor") {
        const auto sys = two_firms(0.09, 0.45, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0);
        RandomStream rng(10, 0);
        const int n = 100000;
        const double dt = 0.25;
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        std::vector<double> dx(n), dy(n);
        for (int k = 0; k < n; ++k) {
            const auto x = mc::evolve_interjump({0.0, 0.0}, 0.0, dt, sys, rng);
            dx[k] = x[0];
            dy[k] = x[1];
            mx += x[0];
            my += x[1];
        }
        mx /= n;
        my /= n;
        for (int k = 0; k < n; ++k) {
            sxx += (dx[k] - mx) * (dx[k] - mx);
            syy += (dy[k] - my) * (dy[k] - my);
            sxy += (dx[k] - mx) * (dy[k] - my);
        }
        CHECK(sxy / std::sqrt(sxx * syy) == Catch::Approx(0.4).margin(0.01));
        // Per-firm increment variance is sigma_i^2 * dt.
        const double var1 = sxx / n;
        const double se1 = 0.09 * 0.09 * dt * std::sqrt(2.0 / n);
        CHECK(var1 == Catch::Approx(0.09 * 0.09 * dt).margin(3.0 * se1));
        const double var2 = syy / n;
        const double se2 = 0.45 * 0.45 * dt * std::sqrt(2.0 / n);
        CHECK(var2 == Catch::Approx(0.45 * 0.45 * dt).margin(3.0 * se2));
    }
}

TEST_CASE("apply_jump") {
    SECTION("zero spread is a deterministic shift") {
        const auto sys = single_firm(0.1, 0.1, -0.25, 0.0);
        RandomStream rng(11, 0);
        const auto x = mc::apply_jump({2.0}, sys, rng);
        CHECK(x[0] == Catch::Approx(1.75).margin(1e-15));
    }
    SECTION("sample moments of the jump size") {
        const auto sys = single_firm(0.1, 0.1, -0.2, 0.5);  // reference A-rated jump distribution
        RandomStream rng(12, 0);
        const int n = 100000;
        double mean = 0.0, m2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const double j = mc::apply_jump({0.0}, sys, rng)[0];
            mean += j;
            m2 += j * j;
        }
        mean /= n;
        const double sd = std::sqrt(m2 / n - mean * mean);
        CHECK(mean == Catch::Approx(-0.2).margin(3.0 * 0.5 / std::sqrt(n)));
        CHECK(sd == Catch::Approx(0.5).margin(3.0 * 0.5 / std::sqrt(2.0 * n)));

        const auto sysB = single_firm(0.45, 0.1, -0.8, 1.5);  // reference B-rated jump distribution
        RandomStream rngB(13, 0);
        double m2b = 0.0, meanb = 0.0;
        for (int k = 0; k < n; ++k) {
            const double j = mc::apply_jump({0.0}, sysB, rngB)[0];
            meanb += j;
            m2b += j * j;
        }
        meanb /= n;
        const double sdb = std::sqrt(m2b / n - meanb * meanb);
        CHECK(sdb == Catch::Approx(1.5).margin(3.0 * 1.5 / std::sqrt(2.0 * n)));
    }
}

TEST_CASE("fpt_correlation") {
    SECTION("independent diffusions give zero") {
        const auto sys = two_firms(0.5, 0.5, 0.0, 0.1, -0.2, 0.5, -0.2, 0.5);
        bridge::InterjumpSegment seg{0.0, 10.0, 2.0, 1.5, -0.001, 0.5, Threshold{0.0, 0.0}};
        CHECK(mc::fpt_correlation(sys, 0, 1, seg, seg) == Catch::Approx(0.0).margin(1e-9));
    }
    SECTION("identical firms at the reference midpoint value") {
        const auto sys = two_firms(1.0, 1.0, 0.4, 0.1, -0.2, 0.5, -0.2, 0.5, 3.73);
        // Segment [0, 10]: midpoint t = 5, current distances 3.73.
        bridge::InterjumpSegment seg{0.0, 10.0, 3.73, 3.0, -0.001, 1.0, Threshold{0.0, 0.0}};
        CHECK(mc::fpt_correlation(sys, 0, 1, seg, seg)
              == Catch::Approx(0.17556886473751884).margin(1e-6));
    }
    SECTION("degenerate probabilities at tiny t fall back to zero") {
        const auto sys = two_firms(0.09, 0.09, 0.4, 0.1, -0.2, 0.5, -0.2, 0.5);
        bridge::InterjumpSegment seg{0.0, 0.001, 2.0, 2.0, -0.001, 0.09, Threshold{0.0, 0.0}};
        CHECK(mc::fpt_correlation(sys, 0, 1, seg, seg) == 0.0);
    }
}

TEST_CASE("unif_run basics") {
    SECTION("unreachable threshold yields no samples") {
        auto sys = single_firm(0.09, 0.0, 0.0, 0.0, /*x0=*/2000.0);
        const auto set = mc::simulate(sys, 100000, 21, 1);
        CHECK(set.samples[0].empty());
        CHECK(set.default_rate(0, 10.0) == 0.0);
    }
    SECTION("single run record is self-consistent") {
        const auto sys = single_firm(0.45, 0.1, -0.8, 1.5);
        for (std::uint64_t sub = 0; sub < 50; ++sub) {
            RandomStream rng(33, sub);
            const auto rec = mc::unif_run(sys, rng);
            REQUIRE(rec.default_time.size() == 1);
            if (std::isnan(rec.default_time[0])) {
                CHECK(rec.samples.empty());
            } else {
                REQUIRE(rec.samples.size() == 1);
                CHECK(rec.samples[0].time == rec.default_time[0]);
                CHECK(rec.samples[0].weight >= 0.0);
                CHECK(rec.default_time[0] > 0.0);
                CHECK(rec.default_time[0] <= 10.0);
            }
        }
    }
}

TEST_CASE("UNIF diffusion-only default rate matches the closed form") {
    // z = 2.10 via x0 = 2.10, sigma = 1, flat boundary, no jumps.
    auto sys = single_firm(1.0, 0.0, 0.0, 0.0, /*x0=*/2.10, /*mu=*/0.0, /*gamma=*/0.0);
    const std::uint64_t n = 50000;
    const auto set = mc::simulate(sys, n, 2024, 1);
    const double p = analytic::default_probability({2.10}, 10.0);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CHECK(set.default_rate(0, 10.0) == Catch::Approx(p).margin(3.0 * se));
    // Intermediate horizons as well.
    for (double t : {2.0, 5.0}) {
        const double pt = analytic::default_probability({2.10}, t);
        const double set_rate = set.default_rate(0, t);
        const double se_t = std::sqrt(pt * (1.0 - pt) / static_cast<double>(n));
        CHECK(set_rate == Catch::Approx(pt).margin(3.0 * se_t));
    }
}

TEST_CASE("UNIF matches the conventional oracle with jumps") {
    const auto sys = single_firm(0.45, 0.1, -0.8, 1.5);  // reference B-rated firm
    const std::uint64_t n = 30000;
    const auto unif = mc::simulate(sys, n, 501, 1);
    const auto conv = mc::conventional_simulate(sys, n, 2e-3, 502, 1);
    for (double t : {2.0, 5.0, 10.0}) {
        const double pu = unif.default_rate(0, t);
        const double pc = conv.default_rate(0, t);
        const double se = std::sqrt((pu * (1 - pu) + pc * (1 - pc)) / static_cast<double>(n));
        CHECK(std::abs(pu - pc) < 3.0 * se + 0.004);  // oracle carries O(sqrt(dt)) bias
    }
}

TEST_CASE("independent firms default jointly at the product rate") {
    const auto sys = two_firms(0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, /*x0=*/0.5);
    const std::uint64_t n = 50000;
    const auto set = mc::simulate(sys, n, 77, 1);
    const double p1 = set.default_rate(0, 10.0);
    const double p2 = set.default_rate(1, 10.0);
    const double p12 = set.joint_default_rate(0, 1, 10.0);
    CHECK(p12 == Catch::Approx(p1 * p2).margin(0.01));
    CHECK(mc::simulated_default_correlation(set, 0, 1, 10.0) == Catch::Approx(0.0).margin(0.02));
}

TEST_CASE("conventional_run deterministic edge") {
    // sigma = 0 handled at the engine level (validation requires sigma > 0,
    // so use a negligible volatility): gamma = mu means the drift-adjusted
    // process never approaches the boundary.
    const auto sys = single_firm(1e-6, 0.0, 0.0, 0.0, 2.0, -0.001, -0.001);
    RandomStream rng(8, 0);
    const auto dts = mc::conventional_run(sys, 1e-2, rng);
    CHECK(std::isnan(dts[0]));
}

TEST_CASE("conventional oracle reproduces the diffusion closed form") {
    auto sys = single_firm(1.0, 0.0, 0.0, 0.0, /*x0=*/2.10, /*mu=*/0.0, /*gamma=*/0.0);
    const std::uint64_t n = 20000;
    const auto set = mc::conventional_simulate(sys, n, 1e-3, 99, 1);
    const double p = analytic::default_probability({2.10}, 10.0);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    // Discretization bias at dt = 1e-3 is ~0.004 and downward.
    CHECK(set.default_rate(0, 10.0) == Catch::Approx(p).margin(3.0 * se + 0.005));
}

TEST_CASE("simulated_default_correlation on synthetic indicators") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    SECTION("comonotone defaults give correlation one") {
        mc::FptSampleSet set;
        set.run_count = 1000;
        set.samples.resize(2);
        set.default_time.assign(2, std::vector<double>(1000, nan));
        for (int r = 0; r < 300; ++r) {
            set.default_time[0][r] = 1.0;
            set.default_time[1][r] = 2.0;
        }
        CHECK(mc::simulated_default_correlation(set, 0, 1, 5.0) == Catch::Approx(1.0));
    }
    SECTION("independent indicators give correlation near zero") {
        RandomStream rng(63, 0);
        mc::FptSampleSet set;
        const int n = 100000;
        set.run_count = n;
        set.samples.resize(2);
        set.default_time.assign(2, std::vector<double>(n, nan));
        for (int r = 0; r < n; ++r) {
            if (rng.bernoulli(0.3)) set.default_time[0][r] = 1.0;
            if (rng.bernoulli(0.3)) set.default_time[1][r] = 1.0;
        }
        CHECK(mc::simulated_default_correlation(set, 0, 1, 5.0) == Catch::Approx(0.0).margin(0.01));
    }
    SECTION("degenerate marginals are an error") {
        mc::FptSampleSet set;
        set.run_count = 10;
        set.samples.resize(2);
        set.default_time.assign(2, std::vector<double>(10, 0.5));
        CHECK_THROWS_AS(mc::simulated_default_correlation(set, 0, 1, 5.0), std::domain_error);
    }
}

TEST_CASE("simulate determinism and bookkeeping") {
    const auto sys = two_firms(0.1587, 0.45, 0.4, 0.1, -0.5515, 1.6412, -0.8, 1.5);
    SECTION("worker count does not change the result") {
        const auto s1 = mc::simulate(sys, 4000, 424242, 1);
        const auto s4 = mc::simulate(sys, 4000, 424242, 4);
        REQUIRE(s1.run_count == s4.run_count);
        for (int i = 0; i < 2; ++i) {
            REQUIRE(s1.samples[i].size() == s4.samples[i].size());
            for (std::size_t k = 0; k < s1.samples[i].size(); ++k) {
                CHECK(s1.samples[i][k].run == s4.samples[i][k].run);
                CHECK(s1.samples[i][k].time == s4.samples[i][k].time);
                CHECK(s1.samples[i][k].weight == s4.samples[i][k].weight);
                CHECK(s1.samples[i][k].kind == s4.samples[i][k].kind);
            }
            for (std::size_t r = 0; r < 4000; ++r) {
                const bool both_nan = std::isnan(s1.default_time[i][r])
                                      && std::isnan(s4.default_time[i][r]);
                CHECK((both_nan || s1.default_time[i][r] == s4.default_time[i][r]));
            }
        }
    }
    SECTION("at most one default per firm per run") {
        const auto set = mc::simulate(sys, 20000, 11, 1);
        for (int i = 0; i < 2; ++i) {
            std::uint64_t prev_run = 0;
            bool first = true;
            std::size_t defaults = 0;
            for (const auto& smp : set.samples[i]) {
                if (!first) CHECK(smp.run > prev_run);  // strictly increasing: one per run
                prev_run = smp.run;
                first = false;
                CHECK(smp.time == set.default_time[i][smp.run]);
                ++defaults;
            }
            std::size_t flagged = 0;
            for (double dt : set.default_time[i]) flagged += !std::isnan(dt);
            CHECK(flagged == defaults);
        }
    }
    SECTION("n_runs = 0 is rejected") {
        CHECK_THROWS_AS(mc::simulate(sys, 0, 1, 1), std::invalid_argument);
    }
}

TEST_CASE("interior acceptance rate equals the crossing probability") {
    // For a fixed segment the stretched uniform lands inside with
    // probability 1 - P_surv by construction; check the composition through
    // the sampler's own arithmetic.
    const bridge::InterjumpSegment seg{0.0, 1.0, 0.8, 0.9, 0.0, 1.0, Threshold{0.0, 0.0}};
    const double p_surv = bridge::survival_probability(seg);
    const double b = 1.0 / (1.0 - p_surv);
    RandomStream rng(313, 0);
    const int n = 200000;
    int accept = 0;
    for (int k = 0; k < n; ++k) {
        const double s = 0.0 + b * rng.u01();
        accept += (s < 1.0);
    }
    const double frac = static_cast<double>(accept) / n;
    const double q = 1.0 - p_surv;
    CHECK(frac == Catch::Approx(q).margin(3.0 * std::sqrt(q * (1 - q) / n)));
}
