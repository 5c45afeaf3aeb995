#pragma once

// Trace, fleet and flavor-catalog data model, their CSV formats, and the
// seeded synthetic trace generator.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "edgecast/common.hpp"

namespace edgecast {

using HourStamp = std::chrono::sys_time<std::chrono::hours>;

inline std::string format_timestamp(HourStamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const auto hour = (t - day).count();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:00:00Z", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(hour));
    return buf;
}

/// Parses `YYYY-MM-DDTHH:00:00Z`. Minutes and seconds must be zero.
inline bool parse_timestamp(std::string_view text, HourStamp& out) {
    using namespace std::chrono;
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
        text[16] != ':' || text[19] != 'Z')
        return false;
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) || !parse_int(text.substr(8, 2), d) ||
        !parse_int(text.substr(11, 2), h) || !parse_int(text.substr(14, 2), mi) || !parse_int(text.substr(17, 2), s))
        return false;
    if (h > 23 || mi != 0 || s != 0) return false;
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok()) return false;
    out = sys_days{ymd} + hours{h};
    return true;
}

inline HourStamp make_timestamp(int y, unsigned mo, unsigned d, unsigned h = 0) {
    using namespace std::chrono;
    return sys_days{year_month_day{year{y}, month{mo}, day{d}}} + hours{h};
}

/// One provider's hourly bandwidth samples (Mbps), contiguous from `start`.
struct TraceSeries {
    std::string provider_id;
    HourStamp start{};
    std::vector<double> samples;

    std::size_t size() const noexcept { return samples.size(); }
    HourStamp time_at(std::size_t i) const { return start + std::chrono::hours(static_cast<long long>(i)); }

    bool operator==(const TraceSeries&) const = default;
};

inline void validate(const TraceSeries& s) {
    if (s.samples.empty()) throw InvalidArgument("trace '" + s.provider_id + "' is empty");
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        if (!std::isfinite(s.samples[i]) || s.samples[i] < 0.0)
            throw InvalidArgument("trace '" + s.provider_id + "' has invalid sample at hour " + std::to_string(i));
    }
}

struct ServerSpec {
    std::string server_id;
    double bandwidth_capacity = 0;  // Mbps
    double cpu_capacity = 0;        // cores
    double memory_capacity = 0;     // GB
    double disk_capacity = 0;       // GB
    double energy_cost_per_hour = 0;

    bool operator==(const ServerSpec&) const = default;
};

struct ContainerFlavor {
    std::string flavor_id;
    double cpu = 0;
    double memory = 0;
    double disk = 0;
    double bandwidth = 0;
    double cost_per_hour = 0;

    bool operator==(const ContainerFlavor&) const = default;
};

inline void validate(const ServerSpec& s) {
    if (!(s.bandwidth_capacity > 0 && s.cpu_capacity > 0 && s.memory_capacity > 0 && s.disk_capacity > 0))
        throw InvalidArgument("server '" + s.server_id + "': capacities must be > 0");
    if (!(s.energy_cost_per_hour >= 0)) throw InvalidArgument("server '" + s.server_id + "': negative energy cost");
}

inline void validate(const ContainerFlavor& f) {
    if (!(f.cpu > 0 && f.memory > 0 && f.disk > 0 && f.bandwidth > 0 && f.cost_per_hour > 0))
        throw InvalidArgument("flavor '" + f.flavor_id + "': all fields must be > 0");
}

struct SynthConfig {
    int provider_count = 10;
    int days = 14;
    double base_level = 100.0;
    double diurnal_amplitude = 50.0;
    double noise_std = 5.0;
    double burst_probability = 0.0;
    double burst_multiplier = 1.0;
    std::uint64_t seed = 0;
    HourStamp start = make_timestamp(2020, 12, 12);
    // Provider phases are drawn uniformly from [-phase_jitter, +phase_jitter].
    double phase_jitter = std::numbers::pi / 4;
};

inline void validate(const SynthConfig& c) {
    if (c.provider_count < 1) throw InvalidArgument("provider_count must be >= 1");
    if (c.days < 1) throw InvalidArgument("days must be >= 1");
    if (!(c.burst_probability >= 0 && c.burst_probability <= 1))
        throw InvalidArgument("burst_probability must be in [0,1]");
    if (!(c.burst_multiplier >= 1)) throw InvalidArgument("burst_multiplier must be >= 1");
    if (!(c.noise_std >= 0)) throw InvalidArgument("noise_std must be >= 0");
    if (!std::isfinite(c.base_level) || !std::isfinite(c.diurnal_amplitude))
        throw InvalidArgument("base_level and diurnal_amplitude must be finite");
}

inline std::string synthetic_provider_id(int index, int count) {
    int width = 3;
    for (int n = count - 1; n >= 1000; n /= 10) ++width;
    std::string digits = std::to_string(index);
    return "p" + std::string(width > static_cast<int>(digits.size()) ? width - digits.size() : 0, '0') + digits;
}

/// Diurnal sinusoid + Gaussian noise (clipped at 0) + multiplicative bursts.
/// Each provider draws from its own stream derived from (seed, provider_id).
inline std::vector<TraceSeries> generate_synthetic_traces(const SynthConfig& cfg) {
    validate(cfg);
    const std::size_t hours = static_cast<std::size_t>(cfg.days) * 24;
    const auto start_hod =
        (cfg.start - std::chrono::floor<std::chrono::days>(cfg.start)).count();
    std::vector<TraceSeries> out;
    out.reserve(static_cast<std::size_t>(cfg.provider_count));
    for (int p = 0; p < cfg.provider_count; ++p) {
        TraceSeries s;
        s.provider_id = synthetic_provider_id(p, cfg.provider_count);
        s.start = cfg.start;
        s.samples.resize(hours);
        Rng rng(derive_seed(cfg.seed, s.provider_id));
        const double phase = rng.uniform(-cfg.phase_jitter, cfg.phase_jitter);
        for (std::size_t h = 0; h < hours; ++h) {
            const auto hod = static_cast<double>((start_hod + static_cast<long long>(h)) % 24);
            double v = cfg.base_level + cfg.diurnal_amplitude * std::sin(2.0 * std::numbers::pi * hod / 24.0 + phase) +
                       cfg.noise_std * rng.normal();
            v = std::max(v, 0.0);
            if (rng.uniform01() < cfg.burst_probability) v *= cfg.burst_multiplier;
            s.samples[h] = v;
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline TraceSeries slice_hours(const TraceSeries& series, std::size_t from_hour, std::size_t to_hour) {
    if (!(from_hour < to_hour && to_hour <= series.size()))
        throw InvalidArgument("slice [" + std::to_string(from_hour) + ", " + std::to_string(to_hour) +
                              ") out of range for length " + std::to_string(series.size()));
    TraceSeries out;
    out.provider_id = series.provider_id;
    out.start = series.time_at(from_hour);
    out.samples.assign(series.samples.begin() + static_cast<std::ptrdiff_t>(from_hour),
                       series.samples.begin() + static_cast<std::ptrdiff_t>(to_hour));
    return out;
}

inline constexpr std::string_view kTraceHeader = "provider_id,timestamp,bandwidth_mbps";
inline constexpr std::string_view kFleetHeader =
    "server_id,bandwidth_mbps,cpu_cores,memory_gb,disk_gb,energy_cost_per_hour";
inline constexpr std::string_view kCatalogHeader = "flavor_id,cpu_cores,memory_gb,disk_gb,bandwidth_mbps,cost_per_hour";

/// Parses the trace CSV. Rows may arrive in any order; the result holds one
/// series per provider, sorted by provider_id, each verified hour-contiguous.
inline std::vector<TraceSeries> parse_trace_csv(std::string_view text) {
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || trim(line) != kTraceHeader)
        throw ParseError(1, std::string("expected header '") + std::string(kTraceHeader) + "'");

    struct Row {
        HourStamp time;
        double value;
        std::size_t line;
    };
    std::map<std::string, std::vector<Row>, std::less<>> rows;
    while (reader.next(line)) {
        const auto ln = reader.line_number();
        if (trim(line).empty()) continue;
        auto f = split_fields(line);
        if (f.size() != 3) throw ParseError(ln, "expected 3 fields, got " + std::to_string(f.size()));
        if (f[0].empty()) throw ParseError(ln, "empty provider_id");
        HourStamp t;
        if (!parse_timestamp(f[1], t)) throw ParseError(ln, "bad timestamp '" + std::string(f[1]) + "'");
        double v = 0;
        if (!parse_double(f[2], v)) throw ParseError(ln, "bad bandwidth '" + std::string(f[2]) + "'");
        if (!std::isfinite(v) || v < 0) throw ParseError(ln, "bandwidth must be finite and >= 0");
        rows[std::string(f[0])].push_back({t, v, ln});
    }

    std::vector<TraceSeries> out;
    out.reserve(rows.size());
    for (auto& [id, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
        TraceSeries s;
        s.provider_id = id;
        s.start = list.front().time;
        s.samples.reserve(list.size());
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto expected = s.start + std::chrono::hours(static_cast<long long>(i));
            if (i > 0 && list[i].time == list[i - 1].time)
                throw ParseError(list[i].line, "duplicate timestamp " + format_timestamp(list[i].time) +
                                                   " for provider '" + id + "'");
            if (list[i].time != expected)
                throw ParseError(list[i].line, "gap in provider '" + id + "': missing hour " +
                                                   format_timestamp(expected));
            s.samples.push_back(list[i].value);
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string emit_trace_csv(const std::vector<TraceSeries>& traces) {
    std::string out(kTraceHeader);
    out += '\n';
    for (const auto& s : traces) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            out += s.provider_id;
            out += ',';
            out += format_timestamp(s.time_at(i));
            out += ',';
            out += format_double(s.samples[i]);
            out += '\n';
        }
    }
    return out;
}

namespace detail {

template <typename Fn>
void parse_table(std::string_view text, std::string_view header, std::size_t fields, Fn&& on_row) {
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || trim(line) != header)
        throw ParseError(1, "expected header '" + std::string(header) + "'");
    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        auto f = split_fields(line);
        if (f.size() != fields)
            throw ParseError(reader.line_number(), "expected " + std::to_string(fields) + " fields, got " +
                                                       std::to_string(f.size()));
        std::vector<double> nums(fields - 1);
        for (std::size_t i = 1; i < fields; ++i) {
            if (!parse_double(f[i], nums[i - 1]))
                throw ParseError(reader.line_number(), "bad number '" + std::string(f[i]) + "'");
        }
        try {
            on_row(std::string(f[0]), nums);
        } catch (const InvalidArgument& e) {
            throw ParseError(reader.line_number(), e.what());
        }
    }
}

}  // namespace detail

inline std::vector<ServerSpec> parse_fleet_csv(std::string_view text) {
    std::vector<ServerSpec> fleet;
    std::set<std::string> seen;
    detail::parse_table(text, kFleetHeader, 6, [&](std::string id, const std::vector<double>& n) {
        if (!seen.insert(id).second) throw InvalidArgument("duplicate server_id '" + id + "'");
        ServerSpec s{std::move(id), n[0], n[1], n[2], n[3], n[4]};
        validate(s);
        fleet.push_back(std::move(s));
    });
    return fleet;
}

inline std::string emit_fleet_csv(const std::vector<ServerSpec>& fleet) {
    std::string out(kFleetHeader);
    out += '\n';
    for (const auto& s : fleet) {
        out += s.server_id + ',' + format_double(s.bandwidth_capacity) + ',' + format_double(s.cpu_capacity) + ',' +
               format_double(s.memory_capacity) + ',' + format_double(s.disk_capacity) + ',' +
               format_double(s.energy_cost_per_hour) + '\n';
    }
    return out;
}

inline std::vector<ContainerFlavor> parse_catalog_csv(std::string_view text) {
    std::vector<ContainerFlavor> catalog;
    std::set<std::string> seen;
    detail::parse_table(text, kCatalogHeader, 6, [&](std::string id, const std::vector<double>& n) {
        if (!seen.insert(id).second) throw InvalidArgument("duplicate flavor_id '" + id + "'");
        ContainerFlavor f{std::move(id), n[0], n[1], n[2], n[3], n[4]};
        validate(f);
        catalog.push_back(std::move(f));
    });
    return catalog;
}

inline std::string emit_catalog_csv(const std::vector<ContainerFlavor>& catalog) {
    std::string out(kCatalogHeader);
    out += '\n';
    for (const auto& f : catalog) {
        out += f.flavor_id + ',' + format_double(f.cpu) + ',' + format_double(f.memory) + ',' +
               format_double(f.disk) + ',' + format_double(f.bandwidth) + ',' + format_double(f.cost_per_hour) +
               '\n';
    }
    return out;
}

}  // namespace edgecast
