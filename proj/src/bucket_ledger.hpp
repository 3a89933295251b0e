#pragma once

#include "cpsched/cost_model.hpp"
#include "cpsched/dacp.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace cpsched::detail {

// Residual bucket capacity and FLOPs load per CP rank during greedy
// placement. Capacities are kept multiplied by N so that a shard of S/N
// tokens is charged exactly as S; no fractional token ever reaches a
// comparison.
class BucketLedger {
public:
    BucketLedger(std::int64_t cp_degree, Tokens bucket_tokens, std::size_t num_sequences)
        : n_(cp_degree),
          remain_scaled_(static_cast<std::size_t>(cp_degree), bucket_tokens * cp_degree),
          loads_(static_cast<std::size_t>(cp_degree), 0.0),
          assignment_(num_sequences, kUnassigned) {}

    static constexpr int kUnassigned = -2;

    std::size_t ranks() const { return remain_scaled_.size(); }

    bool fits_whole(int rank, Tokens len) const { return remain_scaled_[rank] >= len * n_; }
    bool fits_shard(int rank, Tokens len) const { return remain_scaled_[rank] >= len; }

    void place_local(std::size_t seq, int rank, Tokens len, double seq_flops) {
        remain_scaled_[rank] -= len * n_;
        loads_[rank] += seq_flops;
        assignment_[seq] = rank;
    }

    void place_distributed(std::size_t seq, Tokens len, double seq_flops) {
        const double share = seq_flops / static_cast<double>(n_);
        for (std::size_t j = 0; j < ranks(); ++j) {
            remain_scaled_[j] -= len;
            loads_[j] += share;
        }
        assignment_[seq] = kDistributed;
    }

    // Converts the first sequence in `scan_order` that is local on `rank`
    // into a distributed one: the rank gets its whole-sequence charge back,
    // and every rank (including this one) is charged S/N. Fails if the rank
    // holds no local sequence or the freed shard would overflow another rank.
    bool roll_back(int rank, std::span<const std::size_t> scan_order,
                   std::span<const Tokens> lengths, std::span<const double> seq_flops) {
        for (std::size_t seq : scan_order) {
            if (assignment_[seq] != rank)
                continue;
            const Tokens len = lengths[seq];
            for (std::size_t j = 0; j < ranks(); ++j)
                if (static_cast<int>(j) != rank && remain_scaled_[j] < len)
                    return false;
            remain_scaled_[rank] += len * n_;
            loads_[rank] -= seq_flops[seq];
            place_distributed(seq, len, seq_flops[seq]);
            return true;
        }
        return false;
    }

    int argmin_load() const { return index_of(std::min_element(loads_.begin(), loads_.end()), loads_); }
    int argmax_remaining() const {
        return index_of(std::max_element(remain_scaled_.begin(), remain_scaled_.end()),
                        remain_scaled_);
    }
    int argmin_remaining() const {
        return index_of(std::min_element(remain_scaled_.begin(), remain_scaled_.end()),
                        remain_scaled_);
    }

    double residual(int rank) const {
        return static_cast<double>(remain_scaled_[rank]) / static_cast<double>(n_);
    }

    DacpSchedule take_schedule() && { return DacpSchedule{std::move(assignment_)}; }

private:
    // min_element / max_element return the first extremum: ties go to the
    // lowest rank index.
    template <class It, class V>
    static int index_of(It it, const V& v) {
        return static_cast<int>(it - v.begin());
    }

    std::int64_t n_;
    std::vector<Tokens> remain_scaled_;
    std::vector<double> loads_;
    std::vector<int> assignment_;
};

} // namespace cpsched::detail
