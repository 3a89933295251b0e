#include "cpsched/workload.hpp"

#include "cpsched/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace cpsched {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

Tokens draw(const LogNormal& dist, Tokens max_length, std::mt19937_64& rng) {
    std::lognormal_distribution<double> d(dist.log_location, dist.log_scale);
    const double x = std::round(d(rng));
    return std::clamp<Tokens>(static_cast<Tokens>(std::min(x, 1e18)), 1, max_length);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

} // namespace

void LengthTrace::validate() const {
    if (lengths.empty())
        throw ConfigError("trace '" + name + "' is empty");
    for (Tokens s : lengths)
        if (s < 1)
            throw ConfigError("trace '" + name + "' contains a nonpositive length");
}

void DistributionSpec::validate() const {
    if (max_length < 1)
        throw ConfigError("max_length clamp must be >= 1");
    switch (kind) {
    case Kind::LongTail:
        if (!(primary.log_scale > 0.0))
            throw ConfigError("log-normal scale must be positive");
        break;
    case Kind::Bimodal:
        if (!(primary.log_scale > 0.0) || !(secondary.log_scale > 0.0))
            throw ConfigError("log-normal scale must be positive");
        if (!(primary_weight >= 0.0 && primary_weight <= 1.0))
            throw ConfigError("mixing weight must lie in [0, 1]");
        break;
    case Kind::File:
        if (path.empty())
            throw ConfigError("file distribution needs a path");
        break;
    }
}

DistributionSpec preset_distribution(std::string_view name) {
    DistributionSpec spec;
    if (name == "wikipedia") {
        spec.primary = {5.670, 1.059};
        spec.max_length = 78'000;
    } else if (name == "lmsys") {
        spec.primary = {5.746, 1.026};
        spec.max_length = 1'643'000;
    } else if (name == "chatqa2") {
        spec.kind = DistributionSpec::Kind::Bimodal;
        spec.primary = {std::log(900.0), 1.2};
        spec.secondary = {std::log(15'000.0), 0.35};
        spec.primary_weight = 0.41;
        spec.max_length = 99'000;
    } else {
        throw ConfigError("unknown distribution preset '" + std::string(name) + "'");
    }
    return spec;
}

LengthTrace generate(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (spec.kind == DistributionSpec::Kind::File)
        return load_trace(spec.path);
    if (n == 0)
        throw ConfigError("trace size must be >= 1");

    auto rng = make_engine(seed, 0);
    LengthTrace trace;
    trace.name = spec.kind == DistributionSpec::Kind::LongTail ? "longtail" : "bimodal";
    trace.lengths.reserve(n);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (spec.kind == DistributionSpec::Kind::LongTail) {
            trace.lengths.push_back(draw(spec.primary, spec.max_length, rng));
        } else {
            const bool first = coin(rng) < spec.primary_weight;
            trace.lengths.push_back(
                draw(first ? spec.primary : spec.secondary, spec.max_length, rng));
        }
    }
    return trace;
}

LengthTrace parse_trace(std::string_view text, std::string name) {
    LengthTrace trace;
    trace.name = std::move(name);
    const auto body = trim(text);
    if (body.empty())
        throw ParseError("trace is empty", 0);

    if (body.front() == '[') {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid JSON trace: ") + e.what(), 0);
        }
        std::size_t idx = 0;
        for (const auto& v : arr) {
            ++idx;
            if (!v.is_number_integer() || v.get<Tokens>() < 1)
                throw ParseError("entry " + std::to_string(idx) + " is not a positive integer", 0);
            trace.lengths.push_back(v.get<Tokens>());
        }
        if (trace.lengths.empty())
            throw ParseError("trace is empty", 0);
        return trace;
    }

    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty())
            continue;
        Tokens v = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (ec != std::errc{} || ptr != line.data() + line.size())
            throw ParseError("not an integer: '" + std::string(line) + "'", line_no);
        if (v < 1)
            throw ParseError("length must be positive", line_no);
        trace.lengths.push_back(v);
    }
    return trace;
}

LengthTrace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string(), 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace(buf.str(), path.stem().string());
}

QuantileReport quantiles(const LengthTrace& trace, std::span<const Tokens> thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end()) ||
        std::adjacent_find(thresholds.begin(), thresholds.end()) != thresholds.end())
        throw ConfigError("quantile thresholds must be strictly increasing");

    QuantileReport report;
    report.thresholds.assign(thresholds.begin(), thresholds.end());
    if (trace.lengths.empty()) {
        report.fractions.assign(thresholds.size(), 0.0);
        return report;
    }
    std::vector<Tokens> sorted = trace.lengths;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    for (Tokens t : thresholds) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        report.fractions.push_back(static_cast<double>(below) / n);
    }
    report.longest = sorted.back();
    return report;
}

std::vector<Tokens> sample_global_batch(const LengthTrace& trace, std::size_t batch_size,
                                        std::uint64_t seed, std::uint64_t iteration) {
    const std::size_t n = trace.lengths.size();
    if (batch_size == 0 || batch_size > n)
        throw ConfigError("batch size must be in [1, trace size]");

    const std::uint64_t per_epoch = n / batch_size;
    const std::uint64_t epoch = iteration / per_epoch;
    const std::size_t offset = static_cast<std::size_t>(iteration % per_epoch) * batch_size;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_engine(seed, epoch + 1);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Tokens> batch;
    batch.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k)
        batch.push_back(trace.lengths[order[offset + k]]);
    return batch;
}

} // namespace cpsched
