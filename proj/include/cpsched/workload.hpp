#pragma once

// Sequence-length traces: synthetic generators calibrated to real long-SFT
// corpora, file ingestion, quantile summaries and epoch-based batch sampling.

#include "cpsched/cost_model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpsched {

struct LengthTrace {
    std::vector<Tokens> lengths;
    std::string name;

    void validate() const;
};

// Log-normal component in log-token space.
struct LogNormal {
    double log_location = 0.0;
    double log_scale = 1.0;
};

struct DistributionSpec {
    enum class Kind { LongTail, Bimodal, File };

    Kind kind = Kind::LongTail;
    LogNormal primary;            // longtail, or the short mode of a bimodal mix
    LogNormal secondary;          // long mode (bimodal only)
    double primary_weight = 1.0;  // bimodal mixing weight of `primary`
    Tokens max_length = 1 << 20;  // clamp
    std::filesystem::path path;   // file only

    void validate() const;
};

// Named presets: "wikipedia", "lmsys", "chatqa2".
DistributionSpec preset_distribution(std::string_view name);

struct QuantileReport {
    std::vector<Tokens> thresholds;
    std::vector<double> fractions; // fraction strictly below each threshold
    Tokens longest = 0;
};

// Deterministic in (spec, n, seed). File specs load the trace and ignore n/seed.
LengthTrace generate(const DistributionSpec& spec, std::size_t n, std::uint64_t seed);

// One positive integer per line, or a JSON array of positive integers.
LengthTrace load_trace(const std::filesystem::path& path);
LengthTrace parse_trace(std::string_view text, std::string name = "trace");

QuantileReport quantiles(const LengthTrace& trace, std::span<const Tokens> thresholds);

// Batch `iteration` of a without-replacement epoch sampler. Each epoch is an
// independent shuffle seeded by (seed, epoch); a trailing partial batch is
// dropped.
std::vector<Tokens> sample_global_batch(const LengthTrace& trace, std::size_t batch_size,
                                        std::uint64_t seed, std::uint64_t iteration);

} // namespace cpsched
