#pragma once

// Monte Carlo engines. The uniform-sampling (UNIF) engine draws one crossing
// candidate per interjump segment from a stretched uniform and importance-
// weights it with the bridge crossing density, so a run touches each firm a
// handful of times instead of thousands of grid points. A conventional
// Euler-Maruyama engine with superposed jump clocks serves as the brute-force
// oracle. Both share the jump model: segmentation instants arrive with
// exponential gaps (mean mean_interjump) and each instant carries an actual
// jump with probability lambda * mean_interjump, shared by all firms, so the
// realized jump process is Poisson(lambda) and simultaneous across firms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fptmc/analytic.hpp"
#include "fptmc/bridge.hpp"
#include "fptmc/model.hpp"
#include "fptmc/rng.hpp"
#include "fptmc/sou.hpp"
#include "fptmc/timeline.hpp"

namespace fptmc::mc {

enum class SampleKind : std::uint8_t { Interior, Atom };

struct FptSample {
    std::uint64_t run = 0;
    double time = 0.0;
    double weight = 0.0;
    SampleKind kind = SampleKind::Interior;
};

// Weighted first-passage-time samples plus per-run default times, merged
// across all runs. A firm defaults at most once per run, so samples[firm] is
// canonically ordered by run index regardless of how runs were partitioned.
struct FptSampleSet {
    std::uint64_t run_count = 0;
    std::vector<std::vector<FptSample>> samples;       // per firm
    std::vector<std::vector<double>> default_time;     // per firm, NaN = survived

    std::size_t n_firms() const { return samples.size(); }

    double default_rate(std::size_t firm, double t) const {
        std::uint64_t hits = 0;
        for (double dt : default_time[firm]) hits += (dt <= t);  // NaN compares false
        return static_cast<double>(hits) / static_cast<double>(run_count);
    }

    double joint_default_rate(std::size_t i, std::size_t j, double t) const {
        std::uint64_t hits = 0;
        for (std::uint64_t r = 0; r < run_count; ++r) {
            hits += (default_time[i][r] <= t) && (default_time[j][r] <= t);
        }
        return static_cast<double>(hits) / static_cast<double>(run_count);
    }
};

inline std::vector<double> generate_jump_times(double mean_interjump, double horizon,
                                               RandomStream& rng) {
    if (!(mean_interjump > 0.0)) {
        throw std::invalid_argument("generate_jump_times: mean_interjump must be positive");
    }
    std::vector<double> times;
    for (double t = rng.exponential(mean_interjump); t < horizon;
         t += rng.exponential(mean_interjump)) {
        times.push_back(t);
    }
    return times;
}

// One correlated diffusion step for the whole firm vector:
// X(t_next^-) = X(t_prev^+) + mu*dt + sigma_rows * G, cov(G) = I*dt.
inline std::vector<double> evolve_interjump(const std::vector<double>& x_prev, double t_prev,
                                            double t_next, const SystemSpec& sys,
                                            RandomStream& rng) {
    if (!(t_next > t_prev)) throw std::invalid_argument("evolve_interjump: t_next must exceed t_prev");
    const double dt = t_next - t_prev;
    const double sq = std::sqrt(dt);
    std::size_t n_drivers = 0;
    for (const auto& f : sys.firms) n_drivers = std::max(n_drivers, f.sigma_row.size());
    std::vector<double> z(n_drivers);
    for (auto& v : z) v = sq * rng.normal();
    std::vector<double> x(sys.firms.size());
    for (std::size_t i = 0; i < sys.firms.size(); ++i) {
        double dx = sys.firms[i].mu * dt;
        const auto& row = sys.firms[i].sigma_row;
        for (std::size_t k = 0; k < row.size(); ++k) dx += row[k] * z[k];
        x[i] = x_prev[i] + dx;
    }
    return x;
}

// Post-jump values: every firm receives an independent draw from its own
// jump-size distribution (the jump instant itself is shared).
inline std::vector<double> apply_jump(const std::vector<double>& x_pre, const SystemSpec& sys,
                                      RandomStream& rng) {
    std::vector<double> x(x_pre.size());
    for (std::size_t i = 0; i < sys.firms.size(); ++i) {
        x[i] = x_pre[i] + rng.normal(sys.firms[i].jump_mean, sys.firms[i].jump_std);
    }
    return x;
}

// Correlation target for the SOU chain linking the crossing times of two
// firms over one segment: the diffusion-only default correlation evaluated at
// the segment midpoint with the firms' current standardized distances. Tiny
// or saturated marginals make the quotient meaningless and fall back to 0.
inline double fpt_correlation(const SystemSpec& sys, std::size_t firm_i, std::size_t firm_j,
                              const bridge::InterjumpSegment& seg_i,
                              const bridge::InterjumpSegment& seg_j) {
    const double zi = (seg_i.x_start - seg_i.threshold.at(seg_i.t_start)) / seg_i.sigma;
    const double zj = (seg_j.x_start - seg_j.threshold.at(seg_j.t_start)) / seg_j.sigma;
    if (!(zi > 0.0) || !(zj > 0.0)) return 0.0;
    const double t_mid = 0.5 * (seg_i.t_start + seg_i.t_end);
    if (!(t_mid > 0.0)) return 0.0;
    double rho = sys.diffusion_correlation(firm_i, firm_j);
    rho = std::clamp(rho, -0.999, 0.999);
    const double c = analytic::pairwise_default_correlation({zi}, {zj}, rho, t_mid);
    return std::clamp(c, -0.99, 0.99);
}

struct RunRecord {
    std::vector<double> default_time;  // per firm, NaN = survived
    std::vector<FptSample> samples;    // at most one entry per firm
};

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Precomputed per-system quantities plus scratch buffers, reused across runs.
class UnifEngine {
public:
    explicit UnifEngine(const SystemSpec& sys) : sys_(&sys) {
        sys.validate();
        n_ = sys.firms.size();
        for (const auto& f : sys.firms) {
            sigma_.push_back(effective_sigma(f));
            thresholds_.push_back(f.threshold());
            n_drivers_ = std::max(n_drivers_, f.sigma_row.size());
        }
        jump_prob_ = sys.lambda * sys.mean_interjump;
        tl_.x0.resize(n_);
        tl_.x_horizon.resize(n_);
        tl_.pre.resize(n_);
        tl_.post.resize(n_);
    }

    const JumpTimeline& make_timeline(RandomStream& rng) {
        tl_.horizon = sys_->horizon;
        tl_.times = generate_jump_times(sys_->mean_interjump, sys_->horizon, rng);
        const std::size_t m = tl_.times.size();
        tl_.has_jump.resize(m);
        for (auto& hj : tl_.has_jump) hj = jump_prob_ > 0.0 && rng.bernoulli(jump_prob_);
        for (std::size_t i = 0; i < n_; ++i) {
            tl_.x0[i] = sys_->firms[i].x0;
            tl_.pre[i].resize(m);
            tl_.post[i].resize(m);
        }
        z_.resize(n_drivers_);
        double t_prev = 0.0;
        for (std::size_t k = 0; k <= m; ++k) {
            const double t_next = (k == m) ? sys_->horizon : tl_.times[k];
            const double dt = t_next - t_prev;
            const double sq = std::sqrt(std::max(dt, 0.0));
            for (auto& v : z_) v = sq * rng.normal();
            for (std::size_t i = 0; i < n_; ++i) {
                const double start = (k == 0) ? tl_.x0[i] : tl_.post[i][k - 1];
                double dx = sys_->firms[i].mu * dt;
                const auto& row = sys_->firms[i].sigma_row;
                for (std::size_t d = 0; d < row.size(); ++d) dx += row[d] * z_[d];
                const double end = start + dx;
                if (k == m) {
                    tl_.x_horizon[i] = end;
                } else {
                    tl_.pre[i][k] = end;
                    tl_.post[i][k] = tl_.has_jump[k]
                        ? end + rng.normal(sys_->firms[i].jump_mean, sys_->firms[i].jump_std)
                        : end;
                }
            }
            t_prev = t_next;
        }
        return tl_;
    }

    // One Monte Carlo cycle; default times land in out_default (size n_firms)
    // and accepted samples are appended to out_samples with this run's index.
    void run(RandomStream& rng, std::uint64_t run_index, std::vector<double>& out_default,
             std::vector<std::vector<FptSample>>& out_samples) {
        make_timeline(rng);
        out_default.assign(n_, kNaN);
        alive_.clear();
        for (std::size_t i = 0; i < n_; ++i) alive_.push_back(i);

        const std::size_t n_segments = tl_.n_segments();
        for (std::size_t s = 0; s < n_segments && !alive_.empty(); ++s) {
            const double t0 = tl_.seg_start_time(s);
            const double t1 = tl_.seg_end_time(s);
            const double dt = t1 - t0;
            if (!(dt > 0.0)) continue;

            segs_.clear();
            for (std::size_t i : alive_) {
                segs_.push_back(bridge::InterjumpSegment{
                    t0, t1, tl_.seg_start_value(i, s), tl_.seg_end_value(i, s),
                    sys_->firms[i].mu, sigma_[i], thresholds_[i]});
            }

            // A rising boundary can overtake a surviving firm exactly at an
            // instant; that firm is in default the moment the segment opens.
            overtaken_.clear();
            for (std::size_t a = 0; a < alive_.size(); ++a) {
                if (segs_[a].x_start <= thresholds_[alive_[a]].at(t0)) {
                    const std::size_t i = alive_[a];
                    out_default[i] = t0;
                    out_samples[i].push_back({run_index, t0, 1.0, SampleKind::Atom});
                    overtaken_.push_back(a);
                }
            }
            for (auto it = overtaken_.rbegin(); it != overtaken_.rend(); ++it) {
                alive_.erase(alive_.begin() + static_cast<std::ptrdiff_t>(*it));
                segs_.erase(segs_.begin() + static_cast<std::ptrdiff_t>(*it));
            }
            if (alive_.empty()) break;

            // Correlated crossing-time uniforms for the alive firms, linked
            // along consecutive pairs.
            rhos_.clear();
            for (std::size_t a = 0; a + 1 < alive_.size(); ++a) {
                rhos_.push_back(fpt_correlation(*sys_, alive_[a], alive_[a + 1],
                                                segs_[a], segs_[a + 1]));
            }
            ys_ = sou::sou_chain(rhos_, rng);

            dead_.clear();
            for (std::size_t a = 0; a < alive_.size(); ++a) {
                const std::size_t i = alive_[a];
                const bridge::InterjumpSegment& seg = segs_[a];
                const double p_surv = bridge::survival_probability(seg);
                const double q = 1.0 - p_surv;
                if (q > 0.0) {
                    const double b = dt / q;
                    double si = t0 + b * ys_[a];
                    if (q >= 1.0 && si <= t0) si = t0 + 1e-12 * dt;  // crossing certain, nudge off the endpoint
                    if (si > t0 && si < t1) {
                        const double w = b * bridge::crossing_density(seg, si);
                        out_default[i] = si;
                        out_samples[i].push_back({run_index, si, w, SampleKind::Interior});
                        dead_.push_back(a);
                        continue;
                    }
                }
                // Candidate rejected: check the jump atom at the right boundary.
                if (s < tl_.n_instants() && tl_.has_jump[s]) {
                    const double level = thresholds_[i].at(t1);
                    if (tl_.pre[i][s] > level && tl_.post[i][s] <= level) {
                        out_default[i] = t1;
                        out_samples[i].push_back({run_index, t1, 1.0, SampleKind::Atom});
                        dead_.push_back(a);
                    }
                }
            }
            for (auto it = dead_.rbegin(); it != dead_.rend(); ++it) {
                alive_.erase(alive_.begin() + static_cast<std::ptrdiff_t>(*it));
            }
        }
    }

private:
    const SystemSpec* sys_;
    std::size_t n_ = 0;
    std::size_t n_drivers_ = 0;
    double jump_prob_ = 0.0;
    std::vector<double> sigma_;
    std::vector<Threshold> thresholds_;
    JumpTimeline tl_;
    std::vector<double> z_;
    std::vector<std::size_t> alive_, overtaken_, dead_;
    std::vector<bridge::InterjumpSegment> segs_;
    std::vector<double> rhos_, ys_;
};

class ConventionalEngine {
public:
    ConventionalEngine(const SystemSpec& sys, double dt) : sys_(&sys), dt_(dt) {
        sys.validate();
        if (!(dt > 0.0) || dt >= sys.horizon) {
            throw std::invalid_argument("conventional_run: dt must satisfy 0 < dt << horizon");
        }
        n_ = sys.firms.size();
        for (const auto& f : sys.firms) {
            thresholds_.push_back(f.threshold());
            n_drivers_ = std::max(n_drivers_, f.sigma_row.size());
        }
        jump_prob_ = sys.lambda * sys.mean_interjump;
        n_steps_ = static_cast<std::uint64_t>(std::llround(sys.horizon / dt));
        if (n_steps_ < 1) n_steps_ = 1;
    }

    void run(RandomStream& rng, std::vector<double>& out_default) {
        // Jump schedule first: segmentation instants thinned by the shared coin.
        jump_times_.clear();
        for (double t = rng.exponential(sys_->mean_interjump); t < sys_->horizon;
             t += rng.exponential(sys_->mean_interjump)) {
            const bool fires = jump_prob_ > 0.0 && rng.bernoulli(jump_prob_);
            if (fires) jump_times_.push_back(t);
        }
        out_default.assign(n_, kNaN);
        x_.clear();
        for (const auto& f : sys_->firms) x_.push_back(f.x0);
        z_.resize(n_drivers_);
        const double sq = std::sqrt(dt_);
        std::size_t next_jump = 0;
        std::size_t n_alive = n_;
        for (std::uint64_t k = 1; k <= n_steps_ && n_alive > 0; ++k) {
            const double t = static_cast<double>(k) * dt_;
            for (auto& v : z_) v = sq * rng.normal();
            for (std::size_t i = 0; i < n_; ++i) {
                double dx = sys_->firms[i].mu * dt_;
                const auto& row = sys_->firms[i].sigma_row;
                for (std::size_t d = 0; d < row.size(); ++d) dx += row[d] * z_[d];
                x_[i] += dx;
            }
            // Jumps fire at the first grid point past their clock.
            while (next_jump < jump_times_.size() && jump_times_[next_jump] <= t) {
                for (std::size_t i = 0; i < n_; ++i) {
                    x_[i] += rng.normal(sys_->firms[i].jump_mean, sys_->firms[i].jump_std);
                }
                ++next_jump;
            }
            for (std::size_t i = 0; i < n_; ++i) {
                if (std::isnan(out_default[i]) && x_[i] <= thresholds_[i].at(t)) {
                    out_default[i] = t;
                    --n_alive;
                }
            }
        }
    }

private:
    const SystemSpec* sys_;
    double dt_;
    std::size_t n_ = 0;
    std::size_t n_drivers_ = 0;
    double jump_prob_ = 0.0;
    std::uint64_t n_steps_ = 0;
    std::vector<Threshold> thresholds_;
    std::vector<double> jump_times_, x_, z_;
};

struct Block {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
};

inline std::vector<Block> partition_runs(std::uint64_t n_runs, unsigned workers) {
    std::vector<Block> blocks;
    const std::uint64_t w = std::max(1u, workers);
    const std::uint64_t q = n_runs / w;
    const std::uint64_t rem = n_runs % w;
    std::uint64_t lo = 0;
    for (std::uint64_t b = 0; b < w && lo < n_runs; ++b) {
        const std::uint64_t len = q + (b < rem ? 1 : 0);
        blocks.push_back({lo, lo + len});
        lo += len;
    }
    return blocks;
}

template <typename RunBlock>
inline void run_parallel(const std::vector<Block>& blocks, RunBlock&& body) {
    if (blocks.size() == 1) {
        body(0);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        threads.emplace_back([&, b] {
            try {
                body(b);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

}  // namespace detail

// One UNIF Monte Carlo cycle, standalone.
inline RunRecord unif_run(const SystemSpec& sys, RandomStream& rng) {
    detail::UnifEngine engine(sys);
    RunRecord rec;
    std::vector<std::vector<FptSample>> per_firm(sys.firms.size());
    engine.run(rng, 0, rec.default_time, per_firm);
    for (auto& v : per_firm) {
        for (auto& smp : v) rec.samples.push_back(smp);
    }
    return rec;
}

// One conventional Euler-Maruyama cycle; returns per-firm default times
// rounded up to the simulation grid (NaN = survived).
inline std::vector<double> conventional_run(const SystemSpec& sys, double dt, RandomStream& rng) {
    detail::ConventionalEngine engine(sys, dt);
    std::vector<double> out;
    engine.run(rng, out);
    return out;
}

// Run-level parallel UNIF simulation. Run k always uses substream k of the
// seed, so the merged result is bit-identical for any worker count.
inline FptSampleSet simulate(const SystemSpec& sys, std::uint64_t n_runs, std::uint64_t seed,
                             unsigned workers) {
    if (n_runs == 0) throw std::invalid_argument("simulate: n_runs must be >= 1");
    sys.validate();
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n = sys.firms.size();

    FptSampleSet set;
    set.run_count = n_runs;
    set.samples.resize(n);
    set.default_time.assign(n, std::vector<double>(n_runs, detail::kNaN));

    const auto blocks = detail::partition_runs(n_runs, workers);
    std::vector<std::vector<std::vector<FptSample>>> local_samples(blocks.size());

    detail::run_parallel(blocks, [&](std::size_t b) {
        detail::UnifEngine engine(sys);
        auto& samples = local_samples[b];
        samples.resize(n);
        std::vector<double> defaults(n);
        for (std::uint64_t r = blocks[b].lo; r < blocks[b].hi; ++r) {
            RandomStream rng(seed, r);
            engine.run(rng, r, defaults, samples);
            for (std::size_t i = 0; i < n; ++i) set.default_time[i][r] = defaults[i];
        }
    });

    // Blocks are contiguous and ascending, so concatenation keeps samples
    // ordered by run index.
    for (auto& samples : local_samples) {
        for (std::size_t i = 0; i < n; ++i) {
            set.samples[i].insert(set.samples[i].end(), samples[i].begin(), samples[i].end());
        }
    }
    return set;
}

// Parallel driver for the conventional oracle; indicator data only.
inline FptSampleSet conventional_simulate(const SystemSpec& sys, std::uint64_t n_runs, double dt,
                                          std::uint64_t seed, unsigned workers) {
    if (n_runs == 0) throw std::invalid_argument("conventional_simulate: n_runs must be >= 1");
    sys.validate();
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n = sys.firms.size();

    FptSampleSet set;
    set.run_count = n_runs;
    set.samples.resize(n);
    set.default_time.assign(n, std::vector<double>(n_runs, detail::kNaN));

    const auto blocks = detail::partition_runs(n_runs, workers);
    detail::run_parallel(blocks, [&](std::size_t b) {
        detail::ConventionalEngine engine(sys, dt);
        std::vector<double> defaults(n);
        for (std::uint64_t r = blocks[b].lo; r < blocks[b].hi; ++r) {
            RandomStream rng(seed, r);
            engine.run(rng, defaults);
            for (std::size_t i = 0; i < n; ++i) set.default_time[i][r] = defaults[i];
        }
    });
    return set;
}

// Simulated default correlation at horizon t from aggregate indicator
// frequencies across runs. (A per-cycle average is undefined for 0/1
// indicator data: each cycle's denominator vanishes.)
inline double simulated_default_correlation(const FptSampleSet& set, std::size_t firm_i,
                                            std::size_t firm_j, double t) {
    if (set.run_count == 0) throw std::domain_error("simulated_default_correlation: no runs");
    const double p1 = set.default_rate(firm_i, t);
    const double p2 = set.default_rate(firm_j, t);
    if (p1 <= 0.0 || p1 >= 1.0 || p2 <= 0.0 || p2 >= 1.0) {
        throw std::domain_error("simulated_default_correlation: degenerate marginal frequency");
    }
    const double p12 = set.joint_default_rate(firm_i, firm_j, t);
    return (p12 - p1 * p2) / std::sqrt(p1 * (1.0 - p1) * p2 * (1.0 - p2));
}

}  // namespace fptmc::mc
