#pragma once

// Shared jump/segmentation timeline of one Monte Carlo cycle: the ordered
// instants T_1..T_M inside (0, horizon], whether a jump actually fired at each
// instant, and every firm's process value immediately before and after each
// instant. Segment s runs over [seg_start_time(s), seg_end_time(s)] with the
// convention T_0 = 0 and T_{M+1} = horizon.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fptmc {

struct JumpTimeline {
    double horizon = 0.0;
    std::vector<double> times;        // strictly increasing instants in (0, horizon]
    std::vector<std::uint8_t> has_jump;
    std::vector<double> x0;           // per firm, X_i(0)
    std::vector<double> x_horizon;    // per firm, X_i(horizon^-)
    std::vector<std::vector<double>> pre;   // pre[i][k]  = X_i(T_{k+1}^-)
    std::vector<std::vector<double>> post;  // post[i][k] = X_i(T_{k+1}^+)

    std::size_t n_instants() const { return times.size(); }
    std::size_t n_segments() const { return times.size() + 1; }

    double seg_start_time(std::size_t s) const { return s == 0 ? 0.0 : times[s - 1]; }
    double seg_end_time(std::size_t s) const {
        return s == times.size() ? horizon : times[s];
    }
    double seg_start_value(std::size_t firm, std::size_t s) const {
        return s == 0 ? x0[firm] : post[firm][s - 1];
    }
    double seg_end_value(std::size_t firm, std::size_t s) const {
        return s == times.size() ? x_horizon[firm] : pre[firm][s];
    }
};

}  // namespace fptmc
