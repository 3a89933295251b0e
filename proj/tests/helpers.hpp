#pragma once

#include "cpsched/cost_model.hpp"
#include "cpsched/dacp.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace cpsched::testing {

// h = h_kv = b = 1 and unit fits: FLOPs(S) = 24 S + 4 S^2, T = FLOPs.
inline CostModel toy_identity() { return CostModel{}; }

// Toy model with a large fixed collective cost, so sharding short sequences
// loses to local placement.
inline CostModel toy_with_fixed_comm(double t_fixed = 1000.0) {
    CostModel c;
    c.comm_fit = LinearFit{1.0, t_fixed, FitUnit::TimePerElement};
    return c;
}

inline ClusterConfig cluster(std::int64_t n, Tokens c, std::int64_t ws = 1,
                             std::int64_t per_dp_batch = 1) {
    return ClusterConfig{n, ws, c, per_dp_batch};
}

// Heavy-tailed integer lengths in [1, max_len].
inline std::vector<Tokens> random_lengths(std::mt19937_64& rng, std::size_t k, Tokens max_len) {
    std::lognormal_distribution<double> d(4.0, 1.2);
    std::vector<Tokens> out(k);
    for (auto& s : out)
        s = std::clamp<Tokens>(static_cast<Tokens>(d(rng)) + 1, 1, max_len);
    return out;
}

} // namespace cpsched::testing
