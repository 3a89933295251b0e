#pragma once

// Analytical per-layer performance model: transformer FLOPs, context-parallel
// communication volume, and linear latency / activation-memory fits.
//
// Units used throughout the library:
//   lengths      tokens (integer)
//   time         microseconds
//   comm volume  elements (b * S * h_kv); fits are stored per element
//   memory       bytes

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpsched {

using Tokens = std::int64_t;

struct ModelConfig {
    std::int64_t hidden = 1;     // h
    std::int64_t kv_hidden = 1;  // h_kv
    std::int64_t pack_batch = 1; // b, 1 under sequence packing

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

enum class FitUnit { TimePerFlop, TimePerElement, MemoryPerToken };

std::string_view to_string(FitUnit unit);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    FitUnit unit = FitUnit::TimePerFlop;

    static LinearFit identity(FitUnit unit) { return {1.0, 0.0, unit}; }

    double operator()(double x) const { return slope * x + intercept; }
    void validate() const;
    bool operator==(const LinearFit&) const = default;
};

struct ProfilePoint {
    double size = 0.0;  // MB for collectives, tokens for memory
    double value = 0.0; // microseconds, or bytes
};

struct CostModel {
    ModelConfig model;
    LinearFit comp_fit = LinearFit::identity(FitUnit::TimePerFlop);
    LinearFit comm_fit = LinearFit::identity(FitUnit::TimePerElement);
    LinearFit mem_fit = LinearFit::identity(FitUnit::MemoryPerToken);
    // Only used when converting a per-MB collective profile into a per-element fit.
    double bytes_per_element = 2.0;
    // Multiplier on distributed compute; >1 models the kernel-efficiency loss
    // of attention on short per-rank shards.
    double shard_penalty = 1.0;
    // Charge the compute intercept once per sequence instead of once per
    // rank-level sum. Sharded sequences then pay it on every rank.
    bool intercept_per_sequence = false;

    void validate() const;
    bool operator==(const CostModel&) const = default;
};

// (20 b h^2 S + 4 b h h_kv S + 4 b h S^2) / shards
double flops(Tokens seq_len, const ModelConfig& model, std::int64_t shards = 1);

// b * S * h_kv elements
double comm_volume(Tokens seq_len, const ModelConfig& model);

// alpha * flops + beta. Throws ConfigError if the fit is not a compute fit.
double t_comp(double flops_value, const LinearFit& fit);

// Compute time of `sequences` sequences totalling `flops_value` on one rank;
// 0 when there are none.
double compute_time(double flops_value, std::size_t sequences, const CostModel& cost);

// alpha * volume + T_fixed, or 0 when nothing is communicated.
double t_comm(double volume, const LinearFit& fit);

// Ordinary least squares over the points with size >= min_size_threshold.
// A negative intercept is clamped to zero (slope is kept). Throws
// InsufficientProfileError with fewer than two qualifying points.
LinearFit fit_linear(std::span<const ProfilePoint> points, double min_size_threshold,
                     FitUnit unit = FitUnit::TimePerElement);

// Fits a collective-latency profile given in MB and rescales the slope to
// microseconds per element so it can be applied to comm_volume() directly.
LinearFit fit_comm_profile(std::span<const ProfilePoint> points_mb, double min_size_mb,
                           double bytes_per_element);

double elements_to_megabytes(double elements, double bytes_per_element);

// Token capacity per rank: floor((budget - beta) / alpha).
Tokens bucket_size(double mem_budget_bytes, const LinearFit& mem_fit);

// CSV with header `size,latency`.
std::vector<ProfilePoint> load_profile_csv(const std::filesystem::path& path);
std::vector<ProfilePoint> parse_profile_csv(std::string_view text);

// H100 all_to_all latencies (MB -> us), 2 MB to 1 GB.
std::span<const ProfilePoint> reference_all_to_all_profile();

// "identity": unit fits on a toy h = h_kv = b = 1 model (hand-checkable).
// "realistic": 0.5B-class model (h 896, h_kv 128), comm fitted from the
// reference all_to_all profile above 16 MB, nonzero compute launch cost,
// shard penalty 1.2.
CostModel preset_cost_model(std::string_view name);

} // namespace cpsched
