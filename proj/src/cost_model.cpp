#include "cpsched/cost_model.hpp"

#include "cpsched/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cpsched {

namespace {

constexpr double kBytesPerMegabyte = 1024.0 * 1024.0;

constexpr std::array<ProfilePoint, 10> kAllToAll{{
    {2, 80.62},
    {4, 78.63},
    {8, 110.9},
    {16, 163.2},
    {32, 277.5},
    {64, 502.4},
    {128, 939.2},
    {256, 1803.9},
    {512, 3411.2},
    {1024, 6629.6},
}};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view field, std::size_t line) {
    field = trim(field);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("invalid number '" + std::string(field) + "'", line);
    return v;
}

} // namespace

std::string_view to_string(FitUnit unit) {
    switch (unit) {
    case FitUnit::TimePerFlop: return "time-per-flop";
    case FitUnit::TimePerElement: return "time-per-element";
    case FitUnit::MemoryPerToken: return "memory-per-token";
    }
    return "?";
}

void ModelConfig::validate() const {
    if (hidden < 1 || kv_hidden < 1 || pack_batch < 1)
        throw ConfigError("model dimensions must be >= 1");
    if (kv_hidden > hidden)
        throw ConfigError("kv_hidden must not exceed hidden");
}

void LinearFit::validate() const {
    if (!(slope >= 0.0) || !(intercept >= 0.0))
        throw ConfigError(std::string("negative coefficient in ") + std::string(to_string(unit)) +
                          " fit");
}

void CostModel::validate() const {
    model.validate();
    comp_fit.validate();
    comm_fit.validate();
    mem_fit.validate();
    if (comp_fit.unit != FitUnit::TimePerFlop || comm_fit.unit != FitUnit::TimePerElement ||
        mem_fit.unit != FitUnit::MemoryPerToken)
        throw ConfigError("cost model fits are assigned to the wrong roles");
    if (!(bytes_per_element > 0.0))
        throw ConfigError("bytes_per_element must be positive");
    if (!(shard_penalty >= 1.0))
        throw ConfigError("shard_penalty must be >= 1");
}

double flops(Tokens seq_len, const ModelConfig& model, std::int64_t shards) {
    const double s = static_cast<double>(seq_len);
    const double b = static_cast<double>(model.pack_batch);
    const double h = static_cast<double>(model.hidden);
    const double hkv = static_cast<double>(model.kv_hidden);
    const double total = 20.0 * b * h * h * s + 4.0 * b * h * hkv * s + 4.0 * b * h * s * s;
    return total / static_cast<double>(shards);
}

double comm_volume(Tokens seq_len, const ModelConfig& model) {
    return static_cast<double>(model.pack_batch) * static_cast<double>(seq_len) *
           static_cast<double>(model.kv_hidden);
}

double t_comp(double flops_value, const LinearFit& fit) {
    if (fit.unit != FitUnit::TimePerFlop)
        throw ConfigError("t_comp expects a time-per-flop fit, got " +
                          std::string(to_string(fit.unit)));
    return fit(flops_value);
}

double compute_time(double flops_value, std::size_t sequences, const CostModel& cost) {
    if (sequences == 0)
        return 0.0;
    const double t = t_comp(flops_value, cost.comp_fit);
    if (!cost.intercept_per_sequence)
        return t;
    return t + static_cast<double>(sequences - 1) * cost.comp_fit.intercept;
}

double t_comm(double volume, const LinearFit& fit) {
    if (fit.unit != FitUnit::TimePerElement)
        throw ConfigError("t_comm expects a time-per-element fit, got " +
                          std::string(to_string(fit.unit)));
    if (volume <= 0.0)
        return 0.0;
    return fit(volume);
}

LinearFit fit_linear(std::span<const ProfilePoint> points, double min_size_threshold,
                     FitUnit unit) {
    std::vector<const ProfilePoint*> used;
    for (const auto& p : points) {
        if (!(p.size > 0.0) || !(p.value > 0.0))
            throw ParseError("profile points must be positive", 0);
        if (p.size >= min_size_threshold)
            used.push_back(&p);
    }
    if (used.size() < 2)
        throw InsufficientProfileError("need at least 2 profile points at or above size " +
                                       std::to_string(min_size_threshold));

    const auto n = static_cast<Eigen::Index>(used.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = used[i]->size;
        design(i, 1) = 1.0;
        target(i) = used[i]->value;
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);

    if (coef(0) < 0.0)
        throw InsufficientProfileError("profile yields a negative slope");
    return LinearFit{coef(0), std::max(coef(1), 0.0), unit};
}

LinearFit fit_comm_profile(std::span<const ProfilePoint> points_mb, double min_size_mb,
                           double bytes_per_element) {
    LinearFit per_mb = fit_linear(points_mb, min_size_mb, FitUnit::TimePerElement);
    per_mb.slope *= bytes_per_element / kBytesPerMegabyte;
    return per_mb;
}

double elements_to_megabytes(double elements, double bytes_per_element) {
    return elements * bytes_per_element / kBytesPerMegabyte;
}

Tokens bucket_size(double mem_budget_bytes, const LinearFit& mem_fit) {
    if (mem_fit.unit != FitUnit::MemoryPerToken)
        throw ConfigError("bucket_size expects a memory-per-token fit");
    if (!(mem_fit.slope > 0.0))
        throw ConfigError("memory fit slope must be positive");
    if (!(mem_budget_bytes > mem_fit.intercept))
        throw InfeasibleBudgetError("memory budget does not exceed the fixed activation cost");
    return static_cast<Tokens>(std::floor((mem_budget_bytes - mem_fit.intercept) / mem_fit.slope));
}

std::vector<ProfilePoint> parse_profile_csv(std::string_view text) {
    std::vector<ProfilePoint> points;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty())
            continue;
        if (!header_seen) {
            header_seen = true;
            if (line != "size,latency")
                throw ParseError("expected header 'size,latency'", line_no);
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos)
            throw ParseError("expected two comma-separated fields", line_no);
        ProfilePoint p{parse_double(line.substr(0, comma), line_no),
                       parse_double(line.substr(comma + 1), line_no)};
        if (!(p.size > 0.0) || !(p.value > 0.0))
            throw ParseError("profile values must be positive", line_no);
        points.push_back(p);
    }
    if (points.empty())
        throw ParseError("profile has no data rows", 0);
    return points;
}

std::vector<ProfilePoint> load_profile_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string(), 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_profile_csv(buf.str());
}

std::span<const ProfilePoint> reference_all_to_all_profile() { return kAllToAll; }

CostModel preset_cost_model(std::string_view name) {
    if (name == "identity")
        return CostModel{};
    if (name == "realistic") {
        CostModel cost;
        cost.model = ModelConfig{896, 128, 1};
        // ~400 TFLOP/s sustained, 20 us of launch overhead per layer call.
        cost.comp_fit = LinearFit{2.5e-9, 20.0, FitUnit::TimePerFlop};
        cost.comm_fit = fit_comm_profile(kAllToAll, 16.0, cost.bytes_per_element);
        // 2 MB of activations per token: 26000 tokens fill a 52 GB budget.
        cost.mem_fit = LinearFit{2.0e6, 0.0, FitUnit::MemoryPerToken};
        cost.shard_penalty = 1.2;
        cost.intercept_per_sequence = true;
        return cost;
    }
    throw ConfigError("unknown cost model preset '" + std::string(name) + "'");
}

} // namespace cpsched
