#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpsched {

// Bad or inconsistent configuration: invalid model dims, unit-tag mismatch,
// unknown preset, malformed JSON config.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fewer than two profile points survive the size threshold.
class InsufficientProfileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Memory budget does not cover the fixed activation term.
class InfeasibleBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    // 1-based; 0 when the error is not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A scheduler could not produce a plan that fits the per-rank token capacity.
// dp_rank / micro_batch are -1 when not applicable.
class SchedulingError : public std::runtime_error {
public:
    // Placement: CP placement inside a micro-batch failed.
    // Packing: a sequence exceeds the whole micro-batch budget C*N.
    enum class Stage { Placement, Packing };

    explicit SchedulingError(const std::string& what, int dp_rank = -1, int micro_batch = -1,
                             Stage stage = Stage::Placement)
        : std::runtime_error(what), dp_rank_(dp_rank), micro_batch_(micro_batch), stage_(stage) {}

    int dp_rank() const noexcept { return dp_rank_; }
    int micro_batch() const noexcept { return micro_batch_; }
    Stage stage() const noexcept { return stage_; }

private:
    int dp_rank_;
    int micro_batch_;
    Stage stage_;
};

// Exhaustive search refused: instance exceeds the configured enumeration limits.
class LimitExceededError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cpsched
