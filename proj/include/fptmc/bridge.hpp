#pragma once

// Brownian-bridge mathematics on one interjump segment: the probability that
// the bridge stays above the default boundary, the conditional density of the
// first crossing time, the first defaulting jump instant, and the product
// weights that assemble per-segment pieces into the whole-horizon density.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fptmc/model.hpp"
#include "fptmc/timeline.hpp"

namespace fptmc::bridge {

struct InterjumpSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    double x_start = 0.0;  // value just after the left instant
    double x_end = 0.0;    // value just before the right instant
    double mu = 0.0;
    double sigma = 0.0;
    Threshold threshold;

    double tau() const { return t_end - t_start; }
};

inline void check_segment(const InterjumpSegment& seg) {
    if (!(seg.tau() > 0.0)) throw std::domain_error("bridge: segment has nonpositive length");
    if (!(seg.sigma > 0.0)) throw std::domain_error("bridge: sigma must be positive");
}

// Probability that the bridge pinned at (x_start, x_end) stays above the
// boundary over the whole segment. The boundary level is frozen at the
// segment's left endpoint; with the liability growth rate matching the drift
// the drift-adjusted process sees a constant boundary and this is exact.
inline double survival_probability(const InterjumpSegment& seg) {
    check_segment(seg);
    const double level = seg.threshold.at(seg.t_start);
    if (seg.x_end <= level) return 0.0;
    const double a = seg.x_start - level;
    const double b = seg.x_end - level;
    const double p = 1.0 - std::exp(-2.0 * a * b / (seg.tau() * seg.sigma * seg.sigma));
    return std::min(std::max(p, 0.0), 1.0);
}

// Conditional density of the first boundary crossing at time s inside the
// segment, given the two endpoint values. Normalized so that its integral
// over the open segment equals 1 - survival_probability(seg). Evaluation at
// the endpoints themselves is refused.
inline double crossing_density(const InterjumpSegment& seg, double s) {
    check_segment(seg);
    if (!(s > seg.t_start && s < seg.t_end)) {
        throw std::domain_error("crossing_density: s must lie strictly inside the segment");
    }
    const double sig2 = seg.sigma * seg.sigma;
    const double tau = seg.tau();
    const double u = s - seg.t_start;
    const double v = seg.t_end - s;
    const double level = seg.threshold.at(s);
    const double a = seg.x_start - level;
    const double b = seg.x_end - level;
    // Bridge transition normalizer for the endpoint pair.
    const double y = std::exp(-(seg.x_start - seg.x_end + seg.mu * tau)
                              * (seg.x_start - seg.x_end + seg.mu * tau) / (2.0 * tau * sig2))
                     / (seg.sigma * std::sqrt(2.0 * 3.14159265358979323846 * tau));
    const double g = a / (2.0 * y * 3.14159265358979323846 * sig2)
                     * std::pow(u, -1.5) / std::sqrt(v)
                     * std::exp(-(b - seg.mu * v) * (b - seg.mu * v) / (2.0 * v * sig2))
                     * std::exp(-(a + seg.mu * u) * (a + seg.mu * u) / (2.0 * u * sig2));
    return g > 0.0 ? g : 0.0;
}

// Index (1-based) of the first jump whose post-jump value lands at or below
// the boundary while the pre-jump values up to it and the post-jump values
// before it all stayed above; nullopt when no jump defaults the firm. An
// earlier pre-jump value at or below the boundary kills every later index
// (such crossings belong to the interior sampler, not to the jump atom).
inline std::optional<std::size_t> first_jump_default_index(const JumpTimeline& timeline,
                                                           std::size_t firm,
                                                           const Threshold& threshold) {
    for (std::size_t k = 0; k < timeline.n_instants(); ++k) {
        const double level = threshold.at(timeline.times[k]);
        if (timeline.pre[firm][k] <= level) return std::nullopt;
        if (timeline.post[firm][k] <= level) return k + 1;
    }
    return std::nullopt;
}

enum class CrossingCase { Interior, Atom };

// Multiplicative weight of the whole-horizon density at segment L (1-based):
// the interior piece g_L(s) carries the product of the survival probabilities
// of the earlier segments; the atom at T_I additionally includes segment I's
// own survival factor. Segments past the first defaulting jump carry zero.
inline double whole_horizon_density_weight(CrossingCase kind, std::size_t seg_index,
                                           std::size_t first_jump_index,  // 0 when none
                                           const std::vector<double>& survivals) {
    if (seg_index == 0) throw std::invalid_argument("whole_horizon_density_weight: segments are 1-based");
    if (first_jump_index != 0 && seg_index > first_jump_index) return 0.0;
    if (kind == CrossingCase::Atom && seg_index != first_jump_index) return 0.0;
    const std::size_t upto = (kind == CrossingCase::Atom) ? seg_index : seg_index - 1;
    if (survivals.size() < upto) {
        throw std::invalid_argument("whole_horizon_density_weight: missing survival factors");
    }
    double w = 1.0;
    for (std::size_t k = 0; k < upto; ++k) w *= survivals[k];
    return w;
}

}  // namespace fptmc::bridge
