#pragma once

// Hourly provider-to-server placement: container sizing, sticky best-fit
// packing with server shutdown, hill-climbing refinement, the linear cost
// model, an exhaustive optimum for small instances, and daily-profile
// clustering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "edgecast/common.hpp"
#include "edgecast/preprocess.hpp"
#include "edgecast/trace.hpp"

namespace edgecast {

/// hours x providers grid of Mbps, row-major by hour.
struct DemandMatrix {
    std::vector<std::string> provider_ids;
    std::size_t hours = 0;
    std::vector<double> values;

    DemandMatrix() = default;
    DemandMatrix(std::vector<std::string> ids, std::size_t t)
        : provider_ids(std::move(ids)), hours(t), values(t * provider_ids.size(), 0.0) {}

    std::size_t providers() const noexcept { return provider_ids.size(); }
    double& at(std::size_t t, std::size_t p) { return values[t * providers() + p]; }
    double at(std::size_t t, std::size_t p) const { return values[t * providers() + p]; }
    std::span<const double> row(std::size_t t) const {
        return {values.data() + t * providers(), providers()};
    }

    bool operator==(const DemandMatrix&) const = default;
};

inline void validate(const DemandMatrix& d) {
    if (d.values.size() != d.hours * d.providers()) throw InvalidArgument("demand matrix dimensions inconsistent");
    for (double v : d.values)
        if (!std::isfinite(v) || v < 0) throw InvalidArgument("demand values must be finite and >= 0");
}

/// Builds a demand matrix from hours [from, from + hours) of each trace.
inline DemandMatrix demand_from_traces(const std::vector<TraceSeries>& traces, std::size_t from, std::size_t hours) {
    std::vector<std::string> ids;
    for (const auto& t : traces) ids.push_back(t.provider_id);
    DemandMatrix d(std::move(ids), hours);
    for (std::size_t p = 0; p < traces.size(); ++p) {
        if (from + hours > traces[p].size())
            throw InvalidArgument("trace '" + traces[p].provider_id + "' too short for requested demand window");
        for (std::size_t t = 0; t < hours; ++t) d.at(t, p) = traces[p].samples[from + t];
    }
    return d;
}

struct BruteForceBound {
    std::size_t max_providers = 4;
    std::size_t max_servers = 3;
    std::size_t max_hours = 3;
};

struct CostConfig {
    double migration_cost = 1.0;
    double sla_penalty = 50.0;
    double headroom = 1.1;
    double bandwidth_cost_per_mbps_hour = 0.0;
    std::size_t max_container_count = 64;
    std::size_t local_search_max_iters = 100000;
    BruteForceBound brute_force;
};

inline void validate(const CostConfig& c) {
    if (!(c.migration_cost >= 0 && c.sla_penalty >= 0 && c.bandwidth_cost_per_mbps_hour >= 0))
        throw InvalidArgument("cost weights must be >= 0");
    if (!(c.headroom >= 1)) throw InvalidArgument("headroom must be >= 1");
    if (c.max_container_count < 1) throw InvalidArgument("max_container_count must be >= 1");
}

struct CostBreakdown {
    double energy = 0.0;
    double bandwidth = 0.0;
    double migration = 0.0;
    double sla_risk = 0.0;
    double total = 0.0;

    bool operator==(const CostBreakdown&) const = default;
};

/// Per-provider resource needs beyond bandwidth.
struct ProviderNeeds {
    double cpu = 0.0;
    double memory = 0.0;
    double disk = 0.0;
};

struct ContainerSizing {
    std::string flavor_id;
    std::size_t count = 0;
    double cpu = 0.0;     // count * flavor.cpu
    double memory = 0.0;  // count * flavor.memory
    double disk = 0.0;    // count * flavor.disk
    double cost_per_hour = 0.0;

    bool operator==(const ContainerSizing&) const = default;
};

inline constexpr int kUnassigned = -1;

struct AllocationPlan {
    std::vector<std::string> provider_ids;
    std::vector<std::string> server_ids;
    std::size_t hours = 0;
    std::vector<std::vector<int>> assignment;   // [hour][provider] -> server index or kUnassigned
    std::vector<std::vector<char>> powered_on;  // [hour][server]
    std::vector<ContainerSizing> sizing;        // per provider; empty when no catalog was used
    CostBreakdown cost;

    std::size_t providers() const noexcept { return provider_ids.size(); }
    std::size_t servers() const noexcept { return server_ids.size(); }
};

inline AllocationPlan empty_plan(const std::vector<std::string>& provider_ids, const std::vector<ServerSpec>& fleet,
                                 std::size_t hours) {
    AllocationPlan plan;
    plan.provider_ids = provider_ids;
    for (const auto& s : fleet) plan.server_ids.push_back(s.server_id);
    plan.hours = hours;
    plan.assignment.assign(hours, std::vector<int>(provider_ids.size(), kUnassigned));
    plan.powered_on.assign(hours, std::vector<char>(fleet.size(), 0));
    return plan;
}

/// Powers on exactly the servers that host at least one provider.
inline void refresh_power_state(AllocationPlan& plan) {
    for (std::size_t t = 0; t < plan.hours; ++t) {
        std::fill(plan.powered_on[t].begin(), plan.powered_on[t].end(), 0);
        for (int s : plan.assignment[t])
            if (s != kUnassigned) plan.powered_on[t][static_cast<std::size_t>(s)] = 1;
    }
}

/// Provider-hours with hour >= 1 that sit on a different server than the
/// hour before. Transitions to or from "unassigned" are not migrations.
inline std::size_t migration_count(const AllocationPlan& plan) {
    std::size_t n = 0;
    for (std::size_t t = 1; t < plan.hours; ++t)
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            const int a = plan.assignment[t - 1][p], b = plan.assignment[t][p];
            if (a != kUnassigned && b != kUnassigned && a != b) ++n;
        }
    return n;
}

inline std::size_t server_on_hours(const AllocationPlan& plan) {
    std::size_t n = 0;
    for (const auto& row : plan.powered_on) n += static_cast<std::size_t>(std::count(row.begin(), row.end(), 1));
    return n;
}

inline CostBreakdown plan_cost(const AllocationPlan& plan, const DemandMatrix& demand,
                               const std::vector<ServerSpec>& fleet, const CostConfig& cfg) {
    if (demand.hours != plan.hours || demand.providers() != plan.providers())
        throw InvalidArgument("plan and demand dimensions differ");
    if (fleet.size() != plan.servers()) throw InvalidArgument("plan and fleet sizes differ");
    CostBreakdown c;
    std::size_t unassigned = 0;
    for (std::size_t t = 0; t < plan.hours; ++t) {
        for (std::size_t s = 0; s < fleet.size(); ++s)
            if (plan.powered_on[t][s]) c.energy += fleet[s].energy_cost_per_hour;
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            if (plan.assignment[t][p] == kUnassigned)
                ++unassigned;
            else
                c.bandwidth += demand.at(t, p) * cfg.bandwidth_cost_per_mbps_hour;
        }
    }
    c.migration = static_cast<double>(migration_count(plan)) * cfg.migration_cost;
    c.sla_risk = static_cast<double>(unassigned) * cfg.sla_penalty;
    c.total = c.energy + c.bandwidth + c.migration + c.sla_risk;
    return c;
}

/// Cheapest (flavor, count) covering headroom * peak bandwidth and the given
/// cpu/memory/disk needs. Ties: smaller count, then flavor_id.
inline ContainerSizing size_containers(double peak_demand, const ProviderNeeds& needs,
                                       const std::vector<ContainerFlavor>& catalog, double headroom,
                                       std::size_t max_count = 64) {
    if (catalog.empty()) throw InvalidArgument("flavor catalog is empty");
    if (!(peak_demand >= 0) || !std::isfinite(peak_demand)) throw InvalidArgument("peak demand must be >= 0");
    const double need_bw = headroom * peak_demand;
    std::optional<ContainerSizing> best;
    for (const auto& f : catalog) {
        double n = 1.0;
        n = std::max(n, std::ceil(need_bw / f.bandwidth));
        n = std::max(n, std::ceil(needs.cpu / f.cpu));
        n = std::max(n, std::ceil(needs.memory / f.memory));
        n = std::max(n, std::ceil(needs.disk / f.disk));
        if (n > static_cast<double>(max_count)) continue;
        const auto count = static_cast<std::size_t>(n);
        ContainerSizing cand{f.flavor_id, count, n * f.cpu, n * f.memory, n * f.disk, n * f.cost_per_hour};
        if (!best || std::tie(cand.cost_per_hour, cand.count, cand.flavor_id) <
                         std::tie(best->cost_per_hour, best->count, best->flavor_id))
            best = std::move(cand);
    }
    if (!best)
        throw InvalidArgument("no flavor covers peak " + format_double(peak_demand) + " Mbps within " +
                              std::to_string(max_count) + " containers");
    return *best;
}

namespace detail {

inline constexpr double kCapacityTolerance = 1e-9;

struct Footprint {
    double bandwidth = 0.0;  // headroom-scaled
    double cpu = 0.0;
    double memory = 0.0;
    double disk = 0.0;
};

struct ServerLoad {
    double bandwidth = 0.0;
    double cpu = 0.0;
    double memory = 0.0;
    double disk = 0.0;
    std::size_t count = 0;

    void add(const Footprint& f) {
        bandwidth += f.bandwidth;
        cpu += f.cpu;
        memory += f.memory;
        disk += f.disk;
        ++count;
    }
    void remove(const Footprint& f) {
        bandwidth -= f.bandwidth;
        cpu -= f.cpu;
        memory -= f.memory;
        disk -= f.disk;
        --count;
        if (count == 0) *this = {};
    }
};

inline bool within(double used, double cap) { return used <= cap * (1.0 + kCapacityTolerance); }

inline bool fits(const ServerSpec& s, const ServerLoad& l, const Footprint& f) {
    return within(l.bandwidth + f.bandwidth, s.bandwidth_capacity) && within(l.cpu + f.cpu, s.cpu_capacity) &&
           within(l.memory + f.memory, s.memory_capacity) && within(l.disk + f.disk, s.disk_capacity);
}

inline Footprint footprint(double demand, double headroom, const std::vector<ContainerSizing>& sizing,
                           std::size_t p) {
    Footprint f{headroom * demand, 0, 0, 0};
    if (!sizing.empty()) {
        f.cpu = sizing[p].cpu;
        f.memory = sizing[p].memory;
        f.disk = sizing[p].disk;
    }
    return f;
}

inline std::vector<std::size_t> by_demand_desc(std::span<const double> row) {
    std::vector<std::size_t> order(row.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    return order;
}

// Powered-on server that leaves the least spare bandwidth after placement.
inline int best_fit_on(const std::vector<ServerSpec>& fleet, const std::vector<ServerLoad>& load,
                       const std::vector<char>& on, const Footprint& f, int exclude = kUnassigned) {
    int best = kUnassigned;
    double best_slack = 0.0;
    for (std::size_t s = 0; s < fleet.size(); ++s) {
        if (!on[s] || static_cast<int>(s) == exclude || !fits(fleet[s], load[s], f)) continue;
        const double slack = fleet[s].bandwidth_capacity - load[s].bandwidth - f.bandwidth;
        if (best == kUnassigned || slack < best_slack ||
            (slack == best_slack && fleet[s].server_id < fleet[static_cast<std::size_t>(best)].server_id)) {
            best = static_cast<int>(s);
            best_slack = slack;
        }
    }
    return best;
}

enum class NewServerRule { kCheapest, kLargest, kCheapestPerMbps };

// Powered-off server to switch on, ranked by `rule`; ties by server_id.
inline int pick_new_server(const std::vector<ServerSpec>& fleet, const std::vector<ServerLoad>& load,
                           const std::vector<char>& on, const Footprint& f, NewServerRule rule) {
    auto key = [&](const ServerSpec& s) {
        switch (rule) {
            case NewServerRule::kLargest:
                return std::make_tuple(-s.bandwidth_capacity, s.energy_cost_per_hour, std::string_view(s.server_id));
            case NewServerRule::kCheapestPerMbps:
                return std::make_tuple(s.energy_cost_per_hour / s.bandwidth_capacity, -s.bandwidth_capacity,
                                       std::string_view(s.server_id));
            case NewServerRule::kCheapest:
            default:
                return std::make_tuple(s.energy_cost_per_hour, -s.bandwidth_capacity, std::string_view(s.server_id));
        }
    };
    int best = kUnassigned;
    for (std::size_t s = 0; s < fleet.size(); ++s) {
        if (on[s] || !fits(fleet[s], load[s], f)) continue;
        if (best == kUnassigned || key(fleet[s]) < key(fleet[static_cast<std::size_t>(best)])) best = static_cast<int>(s);
    }
    return best;
}

}  // namespace detail

struct HourAssignment {
    std::vector<int> server_of;  // per provider, kUnassigned when nothing fits
    std::vector<char> powered_on;
};

namespace detail {

inline HourAssignment greedy_pass(std::span<const double> demand_row, const std::vector<ServerSpec>& fleet,
                                  std::optional<std::span<const int>> prev, const CostConfig& cfg,
                                  const std::vector<Footprint>& fp, const std::vector<std::size_t>& order,
                                  NewServerRule rule) {
    const std::size_t P = demand_row.size();
    HourAssignment out{std::vector<int>(P, kUnassigned), std::vector<char>(fleet.size(), 0)};
    std::vector<ServerLoad> load(fleet.size());
    auto place = [&](std::size_t p, int s) {
        out.server_of[p] = s;
        out.powered_on[static_cast<std::size_t>(s)] = 1;
        load[static_cast<std::size_t>(s)].add(fp[p]);
    };

    if (prev) {
        for (std::size_t p : order) {
            const int s = (*prev)[p];
            if (s != kUnassigned && fits(fleet[static_cast<std::size_t>(s)], load[static_cast<std::size_t>(s)], fp[p]))
                place(p, s);
        }
    }
    for (std::size_t p : order) {
        if (out.server_of[p] != kUnassigned) continue;
        int s = best_fit_on(fleet, load, out.powered_on, fp[p]);
        if (s == kUnassigned) s = pick_new_server(fleet, load, out.powered_on, fp[p], rule);
        if (s != kUnassigned) place(p, s);
    }

    // Offload and shut down: drain the lightest server onto the others while
    // the energy saved exceeds the migrations added.
    auto migration_flag = [&](std::size_t p, int s) -> int {
        if (!prev) return 0;
        const int before = (*prev)[p];
        return before != kUnassigned && before != s ? 1 : 0;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::size_t> servers;
        for (std::size_t s = 0; s < fleet.size(); ++s)
            if (out.powered_on[s]) servers.push_back(s);
        std::stable_sort(servers.begin(), servers.end(), [&](std::size_t a, std::size_t b) {
            return std::tie(load[a].bandwidth, fleet[a].server_id) < std::tie(load[b].bandwidth, fleet[b].server_id);
        });
        for (std::size_t s : servers) {
            std::vector<std::size_t> members;
            for (std::size_t p : order)
                if (out.server_of[p] == static_cast<int>(s)) members.push_back(p);
            auto trial_load = load;
            std::vector<int> target(members.size(), kUnassigned);
            bool ok = true;
            double delta = -fleet[s].energy_cost_per_hour;
            for (std::size_t m = 0; m < members.size(); ++m) {
                const std::size_t p = members[m];
                target[m] = best_fit_on(fleet, trial_load, out.powered_on, fp[p], static_cast<int>(s));
                if (target[m] == kUnassigned) {
                    ok = false;
                    break;
                }
                trial_load[static_cast<std::size_t>(target[m])].add(fp[p]);
                delta += cfg.migration_cost *
                         static_cast<double>(migration_flag(p, target[m]) - migration_flag(p, static_cast<int>(s)));
            }
            if (!ok || !(delta < 0)) continue;
            for (std::size_t m = 0; m < members.size(); ++m) out.server_of[members[m]] = target[m];
            trial_load[s] = {};
            load = std::move(trial_load);
            out.powered_on[s] = 0;
            changed = true;
            break;
        }
    }
    return out;
}

// Cost of one hour in isolation, including migrations from `prev`.
inline double hour_cost(const HourAssignment& a, std::span<const double> demand_row,
                        const std::vector<ServerSpec>& fleet, std::optional<std::span<const int>> prev,
                        const CostConfig& cfg) {
    double c = 0.0;
    for (std::size_t s = 0; s < fleet.size(); ++s)
        if (a.powered_on[s]) c += fleet[s].energy_cost_per_hour;
    for (std::size_t p = 0; p < demand_row.size(); ++p) {
        const int s = a.server_of[p];
        if (s == kUnassigned) {
            c += cfg.sla_penalty;
            continue;
        }
        c += demand_row[p] * cfg.bandwidth_cost_per_mbps_hour;
        if (prev && (*prev)[p] != kUnassigned && (*prev)[p] != s) c += cfg.migration_cost;
    }
    return c;
}

}  // namespace detail

/// One hour of placement. Providers are taken in descending demand order:
/// each first stays on its previous server if it still fits, the rest are
/// best-fit onto powered-on servers, and a new server is powered on only when
/// none fits. Lightly loaded servers are then drained onto the others and
/// switched off whenever the saved energy outweighs the migrations caused.
/// The same pass is repeated with ascending order, with alternative rules for
/// which server to power on, and without stickiness; the cheapest hour
/// (migrations from the previous hour included) wins, ties to the first variant.
/// `sizing` may be empty (no cpu/memory/disk footprint).
inline HourAssignment greedy_assign(std::span<const double> demand_row, const std::vector<ServerSpec>& fleet,
                                    std::optional<std::span<const int>> prev, const CostConfig& cfg,
                                    const std::vector<ContainerSizing>& sizing = {}) {
    if (fleet.empty()) throw InvalidArgument("fleet is empty");
    const std::size_t P = demand_row.size();
    if (prev && prev->size() != P) throw InvalidArgument("previous assignment size mismatch");
    if (!sizing.empty() && sizing.size() != P) throw InvalidArgument("sizing size mismatch");

    std::vector<detail::Footprint> fp(P);
    for (std::size_t p = 0; p < P; ++p) fp[p] = detail::footprint(demand_row[p], cfg.headroom, sizing, p);
    const auto descending = detail::by_demand_desc(demand_row);
    const std::vector<std::size_t> ascending(descending.rbegin(), descending.rend());

    std::optional<HourAssignment> best;
    double best_cost = 0.0;
    for (bool sticky : {true, false}) {
        if (!sticky && !prev) break;
        for (const auto* order : {&descending, &ascending}) {
            for (auto rule : {detail::NewServerRule::kCheapest, detail::NewServerRule::kLargest,
                              detail::NewServerRule::kCheapestPerMbps}) {
                auto cand = detail::greedy_pass(demand_row, fleet, sticky ? prev : std::nullopt, cfg, fp, *order, rule);
                const double c = detail::hour_cost(cand, demand_row, fleet, prev, cfg);
                if (!best || c < best_cost) {
                    best = std::move(cand);
                    best_cost = c;
                }
            }
        }
    }
    return *best;
}

namespace detail {

// Incremental cost bookkeeping for hill climbing over a whole plan.
class PlanSearch {
public:
    PlanSearch(AllocationPlan& plan, const DemandMatrix& demand, const std::vector<ServerSpec>& fleet,
               const CostConfig& cfg)
        : plan_(plan), demand_(demand), fleet_(fleet), cfg_(cfg) {
        const std::size_t T = plan.hours, P = plan.providers();
        fp_.resize(T * P);
        load_.assign(T, std::vector<ServerLoad>(fleet.size()));
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t p = 0; p < P; ++p) {
                fp_[t * P + p] = footprint(demand.at(t, p), cfg.headroom, plan.sizing, p);
                const int s = plan.assignment[t][p];
                if (s != kUnassigned) load_[t][static_cast<std::size_t>(s)].add(fp_[t * P + p]);
            }
    }

    std::size_t run(std::size_t max_iters) {
        std::size_t accepted = 0;
        bool improved = true;
        while (improved && accepted < max_iters) {
            improved = false;
            for (std::size_t t = 0; t < plan_.hours && accepted < max_iters; ++t) {
                for (std::size_t p = 0; p < plan_.providers() && accepted < max_iters; ++p) {
                    if (try_moves(t, p)) {
                        ++accepted;
                        improved = true;
                    }
                }
                for (std::size_t p = 0; p < plan_.providers() && accepted < max_iters; ++p)
                    for (std::size_t q = p + 1; q < plan_.providers() && accepted < max_iters; ++q)
                        if (try_swap(t, p, q)) {
                            ++accepted;
                            improved = true;
                        }
                for (std::size_t p = 0; p < plan_.providers() && accepted < max_iters; ++p)
                    if (at(t, p) == kUnassigned && try_eject(t, p)) {
                        ++accepted;
                        improved = true;
                    }
                for (std::size_t s = 0; s < fleet_.size() && accepted < max_iters; ++s)
                    if (try_drain(t, s)) {
                        ++accepted;
                        improved = true;
                    }
                if (accepted < max_iters && try_resolve_hour(t)) {
                    ++accepted;
                    improved = true;
                }
            }
            if (plan_.hours < 2) continue;
            const auto ranges = spans();
            const int S = static_cast<int>(fleet_.size());
            for (const auto& [a, b] : ranges) {
                for (std::size_t p = 0; p < plan_.providers() && accepted < max_iters; ++p)
                    for (int s = 0; s < S && accepted < max_iters; ++s)
                        if (try_segment(p, s, a, b)) {
                            ++accepted;
                            improved = true;
                        }
                for (int from = 0; from < S && accepted < max_iters; ++from)
                    for (int to = 0; to < S && accepted < max_iters; ++to)
                        if (from != to && try_relocate(from, to, a, b)) {
                            ++accepted;
                            improved = true;
                        }
            }
        }
        return accepted;
    }

private:
    const Footprint& fp(std::size_t t, std::size_t p) const { return fp_[t * plan_.providers() + p]; }
    int at(std::size_t t, std::size_t p) const { return plan_.assignment[t][p]; }

    static int moved(int a, int b) { return a != kUnassigned && b != kUnassigned && a != b ? 1 : 0; }

    // Migration terms touching (t, p) if the provider sat on server s.
    int migrations_with(std::size_t t, std::size_t p, int s) const {
        int n = 0;
        if (t > 0) n += moved(at(t - 1, p), s);
        if (t + 1 < plan_.hours) n += moved(s, at(t + 1, p));
        return n;
    }

    double move_delta(std::size_t t, std::size_t p, int from, int to) const {
        double d = cfg_.migration_cost * static_cast<double>(migrations_with(t, p, to) - migrations_with(t, p, from));
        if (from != kUnassigned && load_[t][static_cast<std::size_t>(from)].count == 1)
            d -= fleet_[static_cast<std::size_t>(from)].energy_cost_per_hour;
        if (to != kUnassigned && load_[t][static_cast<std::size_t>(to)].count == 0)
            d += fleet_[static_cast<std::size_t>(to)].energy_cost_per_hour;
        const double bw = demand_.at(t, p) * cfg_.bandwidth_cost_per_mbps_hour;
        if (from == kUnassigned) d += bw - cfg_.sla_penalty;
        if (to == kUnassigned) d += cfg_.sla_penalty - bw;
        return d;
    }

    void apply_move(std::size_t t, std::size_t p, int to) {
        const int from = at(t, p);
        if (from != kUnassigned) load_[t][static_cast<std::size_t>(from)].remove(fp(t, p));
        if (to != kUnassigned) load_[t][static_cast<std::size_t>(to)].add(fp(t, p));
        plan_.assignment[t][p] = to;
    }

    bool try_moves(std::size_t t, std::size_t p) {
        const int from = at(t, p);
        int best = from;
        double best_delta = 0.0;
        for (int s = kUnassigned; s < static_cast<int>(fleet_.size()); ++s) {
            if (s == from) continue;
            if (s != kUnassigned && !fits(fleet_[static_cast<std::size_t>(s)], load_[t][static_cast<std::size_t>(s)], fp(t, p)))
                continue;
            const double d = move_delta(t, p, from, s);
            if (d < best_delta) {
                best_delta = d;
                best = s;
            }
        }
        if (best == from) return false;
        apply_move(t, p, best);
        return true;
    }

    bool try_swap(std::size_t t, std::size_t p, std::size_t q) {
        const int a = at(t, p), b = at(t, q);
        if (a == kUnassigned || b == kUnassigned || a == b) return false;
        auto la = load_[t][static_cast<std::size_t>(a)];
        auto lb = load_[t][static_cast<std::size_t>(b)];
        la.remove(fp(t, p));
        lb.remove(fp(t, q));
        if (!fits(fleet_[static_cast<std::size_t>(a)], la, fp(t, q)) ||
            !fits(fleet_[static_cast<std::size_t>(b)], lb, fp(t, p)))
            return false;
        const int before = migrations_with(t, p, a) + migrations_with(t, q, b);
        const int after = migrations_with(t, p, b) + migrations_with(t, q, a);
        if (!(cfg_.migration_cost * static_cast<double>(after - before) < 0)) return false;
        apply_move(t, p, b);
        apply_move(t, q, a);
        return true;
    }

    struct Step {
        std::size_t t;
        std::size_t p;
        int from;
    };

    // Applies a move and records how to undo it; returns its cost delta.
    double push_move(std::size_t t, std::size_t p, int to, std::vector<Step>& journal) {
        const int from = at(t, p);
        const double d = move_delta(t, p, from, to);
        apply_move(t, p, to);
        journal.push_back({t, p, from});
        return d;
    }

    void rollback(std::vector<Step>& journal) {
        for (auto it = journal.rbegin(); it != journal.rend(); ++it) apply_move(it->t, it->p, it->from);
        journal.clear();
    }

    // Hour ranges tried by multi-hour moves: every prefix and suffix, plus
    // every range of up to kMaxSpan hours.
    static constexpr std::size_t kMaxSpan = 24;
    std::vector<std::pair<std::size_t, std::size_t>> spans() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        const std::size_t T = plan_.hours;
        for (std::size_t a = 0; a < T; ++a)
            for (std::size_t b = a; b < T; ++b)
                if (a == 0 || b + 1 == T || b - a < kMaxSpan) out.emplace_back(a, b);
        return out;
    }

    // Provider p sits on server s for every hour in [a, b].
    bool try_segment(std::size_t p, int s, std::size_t a, std::size_t b) {
        std::vector<Step> journal;
        double d = 0.0;
        for (std::size_t t = a; t <= b; ++t) {
            if (at(t, p) == s) continue;
            if (!server_fits(t, s, p)) {
                rollback(journal);
                return false;
            }
            d += push_move(t, p, s, journal);
        }
        if (!journal.empty() && d < 0) return true;
        rollback(journal);
        return false;
    }

    // Everything on server `from` moves to server `to` for every hour in [a, b].
    bool try_relocate(int from, int to, std::size_t a, std::size_t b) {
        std::vector<Step> journal;
        double d = 0.0;
        for (std::size_t t = a; t <= b; ++t) {
            for (std::size_t p = 0; p < plan_.providers(); ++p) {
                if (at(t, p) != from) continue;
                if (!server_fits(t, to, p)) {
                    rollback(journal);
                    return false;
                }
                d += push_move(t, p, to, journal);
            }
        }
        if (!journal.empty() && d < 0) return true;
        rollback(journal);
        return false;
    }

    bool server_fits(std::size_t t, int s, std::size_t p) const {
        return fits(fleet_[static_cast<std::size_t>(s)], load_[t][static_cast<std::size_t>(s)], fp(t, p));
    }

    // Unassigned p takes the place of some q, which moves to another server
    // or becomes unassigned itself.
    bool try_eject(std::size_t t, std::size_t p) {
        const int S = static_cast<int>(fleet_.size());
        std::vector<Step> journal;
        for (int s = 0; s < S; ++s) {
            for (std::size_t q = 0; q < plan_.providers(); ++q) {
                if (q == p || at(t, q) != s) continue;
                for (int dest = kUnassigned; dest < S; ++dest) {
                    if (dest == s || (dest != kUnassigned && !server_fits(t, dest, q))) continue;
                    double d = push_move(t, q, dest, journal);
                    if (server_fits(t, s, p)) {
                        d += push_move(t, p, s, journal);
                        if (d < 0) return true;
                    }
                    rollback(journal);
                }
            }
        }
        return false;
    }

    // Moves every provider off server s (best-fit onto other powered-on
    // servers) so it can be switched off.
    bool try_drain(std::size_t t, std::size_t s) {
        if (load_[t][s].count == 0) return false;
        std::vector<std::size_t> members;
        for (std::size_t p = 0; p < plan_.providers(); ++p)
            if (at(t, p) == static_cast<int>(s)) members.push_back(p);
        std::stable_sort(members.begin(), members.end(),
                         [&](std::size_t a, std::size_t b) { return demand_.at(t, a) > demand_.at(t, b); });
        std::vector<char> on(fleet_.size(), 0);
        for (std::size_t k = 0; k < fleet_.size(); ++k) on[k] = load_[t][k].count > 0 && k != s;
        std::vector<Step> journal;
        double d = 0.0;
        for (std::size_t p : members) {
            const int dest = best_fit_on(fleet_, load_[t], on, fp(t, p), static_cast<int>(s));
            if (dest == kUnassigned) {
                rollback(journal);
                return false;
            }
            d += push_move(t, p, dest, journal);
        }
        if (d < 0) return true;
        rollback(journal);
        return false;
    }

    // Re-packs hour t from scratch by depth-first branch and bound, with the
    // neighbouring hours held fixed. Gives up after kHourNodeBudget nodes and
    // keeps the best complete packing found so far.
    static constexpr std::size_t kHourNodeBudget = 20000;

    struct HourSearch {
        std::size_t t = 0;
        std::vector<std::size_t> order;
        std::vector<ServerLoad> load;
        std::vector<int> pick, best_pick;
        double best = 0.0;
        std::size_t nodes = 0;
    };

    void hour_dfs(HourSearch& h, std::size_t k, double partial) const {
        if (partial >= h.best - 1e-9 || h.nodes >= kHourNodeBudget) return;
        ++h.nodes;
        if (k == h.order.size()) {
            h.best = partial;
            h.best_pick = h.pick;
            return;
        }
        const std::size_t p = h.order[k];
        const int cur = at(h.t, p);
        const double bw = demand_.at(h.t, p) * cfg_.bandwidth_cost_per_mbps_hour;
        auto branch = [&](int s) {
            double d = cfg_.migration_cost * static_cast<double>(migrations_with(h.t, p, s));
            if (s == kUnassigned) {
                h.pick[p] = s;
                hour_dfs(h, k + 1, partial + d + cfg_.sla_penalty);
                return;
            }
            auto& l = h.load[static_cast<std::size_t>(s)];
            if (!fits(fleet_[static_cast<std::size_t>(s)], l, fp(h.t, p))) return;
            if (l.count == 0) d += fleet_[static_cast<std::size_t>(s)].energy_cost_per_hour;
            l.add(fp(h.t, p));
            h.pick[p] = s;
            hour_dfs(h, k + 1, partial + d + bw);
            l.remove(fp(h.t, p));
        };
        if (cur != kUnassigned) branch(cur);
        for (int s = 0; s < static_cast<int>(fleet_.size()); ++s)
            if (s != cur) branch(s);
        if (cur != kUnassigned) branch(kUnassigned);
    }

    double hour_contribution(std::size_t t) const {
        double c = 0.0;
        for (std::size_t s = 0; s < fleet_.size(); ++s)
            if (load_[t][s].count > 0) c += fleet_[s].energy_cost_per_hour;
        for (std::size_t p = 0; p < plan_.providers(); ++p) {
            const int s = at(t, p);
            c += cfg_.migration_cost * static_cast<double>(migrations_with(t, p, s));
            c += s == kUnassigned ? cfg_.sla_penalty : demand_.at(t, p) * cfg_.bandwidth_cost_per_mbps_hour;
        }
        return c;
    }

    bool try_resolve_hour(std::size_t t) {
        HourSearch h;
        h.t = t;
        h.order = by_demand_desc(demand_.row(t));
        h.load.assign(fleet_.size(), ServerLoad{});
        h.pick.assign(plan_.providers(), kUnassigned);
        h.best = hour_contribution(t);
        hour_dfs(h, 0, 0.0);
        if (h.best_pick.empty()) return false;
        for (std::size_t p = 0; p < plan_.providers(); ++p) apply_move(t, p, kUnassigned);
        for (std::size_t p = 0; p < plan_.providers(); ++p) apply_move(t, p, h.best_pick[p]);
        return true;
    }

    AllocationPlan& plan_;
    const DemandMatrix& demand_;
    const std::vector<ServerSpec>& fleet_;
    const CostConfig& cfg_;
    std::vector<Footprint> fp_;
    std::vector<std::vector<ServerLoad>> load_;
};

}  // namespace detail

/// Hill climbing over single provider-hour moves (including to and from
/// "unassigned"), same-hour pairwise swaps, ejections (an unassigned provider
/// displaces an assigned one), server drains, and multi-hour moves of one
/// provider or of a whole server's tenants onto another server. A move is taken only if it
/// strictly lowers total cost and keeps every capacity satisfied; stops at a
/// local optimum or after max_iters accepted moves.
inline AllocationPlan local_search_refine(AllocationPlan plan, const DemandMatrix& demand,
                                          const std::vector<ServerSpec>& fleet, const CostConfig& cfg,
                                          std::size_t max_iters) {
    if (max_iters == 0) return plan;
    detail::PlanSearch search(plan, demand, fleet, cfg);
    search.run(max_iters);
    refresh_power_state(plan);
    plan.cost = plan_cost(plan, demand, fleet, cfg);
    return plan;
}

inline std::vector<ContainerSizing> size_all(const DemandMatrix& demand, const std::vector<ContainerFlavor>& catalog,
                                             const CostConfig& cfg, const std::vector<ProviderNeeds>& needs = {}) {
    std::vector<ContainerSizing> sizing;
    if (catalog.empty()) return sizing;
    if (!needs.empty() && needs.size() != demand.providers()) throw InvalidArgument("provider needs size mismatch");
    for (std::size_t p = 0; p < demand.providers(); ++p) {
        double peak = 0.0;
        for (std::size_t t = 0; t < demand.hours; ++t) peak = std::max(peak, demand.at(t, p));
        sizing.push_back(size_containers(peak, needs.empty() ? ProviderNeeds{} : needs[p], catalog, cfg.headroom,
                                         cfg.max_container_count));
    }
    return sizing;
}

/// Containers are sized from each provider's horizon peak. Three starting
/// plans are built and each is refined by local search: hour-by-hour greedy
/// sticky to the hour before, the same run backwards in time, and one
/// placement packed for every provider's horizon peak held for all hours.
/// The cheapest refined plan wins, earlier starts winning ties.
inline AllocationPlan plan_horizon(const DemandMatrix& demand, const std::vector<ServerSpec>& fleet,
                                   const std::vector<ContainerFlavor>& catalog, const CostConfig& cfg,
                                   const std::vector<ProviderNeeds>& needs = {}) {
    validate(demand);
    validate(cfg);
    if (fleet.empty()) throw InvalidArgument("fleet is empty");
    const auto sizing = size_all(demand, catalog, cfg, needs);
    const std::size_t T = demand.hours;

    auto refine = [&](AllocationPlan plan) {
        refresh_power_state(plan);
        plan.cost = plan_cost(plan, demand, fleet, cfg);
        return local_search_refine(std::move(plan), demand, fleet, cfg, cfg.local_search_max_iters);
    };
    auto sticky_sweep = [&](bool forward) {
        auto plan = empty_plan(demand.provider_ids, fleet, T);
        plan.sizing = sizing;
        for (std::size_t k = 0; k < T; ++k) {
            const std::size_t t = forward ? k : T - 1 - k;
            std::optional<std::span<const int>> prev;
            if (k > 0) prev = std::span<const int>(plan.assignment[forward ? t - 1 : t + 1]);
            plan.assignment[t] = greedy_assign(demand.row(t), fleet, prev, cfg, sizing).server_of;
        }
        return refine(std::move(plan));
    };

    auto best = sticky_sweep(true);
    if (T < 2) return best;
    auto keep_cheaper = [&](AllocationPlan alt) {
        if (alt.cost.total < best.cost.total) best = std::move(alt);
    };
    keep_cheaper(sticky_sweep(false));

    std::vector<double> peak(demand.providers(), 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t p = 0; p < demand.providers(); ++p) peak[p] = std::max(peak[p], demand.at(t, p));
    const auto fixed = greedy_assign(peak, fleet, std::nullopt, cfg, sizing);
    auto held = empty_plan(demand.provider_ids, fleet, T);
    held.sizing = sizing;
    for (std::size_t t = 0; t < T; ++t) held.assignment[t] = fixed.server_of;
    keep_cheaper(refine(std::move(held)));
    return best;
}

/// Checks every plan invariant; returns human-readable problems (empty = valid).
inline std::vector<std::string> verify_plan(const AllocationPlan& plan, const DemandMatrix& demand,
                                           const std::vector<ServerSpec>& fleet, const CostConfig& cfg) {
    std::vector<std::string> problems;
    if (demand.hours != plan.hours || demand.providers() != plan.providers() || fleet.size() != plan.servers() ||
        plan.assignment.size() != plan.hours || plan.powered_on.size() != plan.hours) {
        problems.push_back("dimension mismatch between plan, demand and fleet");
        return problems;
    }
    if (!plan.sizing.empty() && plan.sizing.size() != plan.providers()) problems.push_back("sizing size mismatch");
    const auto& sizing = plan.sizing.size() == plan.providers() ? plan.sizing : std::vector<ContainerSizing>{};
    for (std::size_t t = 0; t < plan.hours; ++t) {
        std::vector<detail::ServerLoad> load(fleet.size());
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            const int s = plan.assignment[t][p];
            if (s == kUnassigned) continue;
            if (s < 0 || static_cast<std::size_t>(s) >= fleet.size()) {
                problems.push_back("hour " + std::to_string(t) + ": bad server index");
                continue;
            }
            if (!plan.powered_on[t][static_cast<std::size_t>(s)])
                problems.push_back("hour " + std::to_string(t) + ": provider '" + plan.provider_ids[p] +
                                   "' on powered-off server '" + fleet[static_cast<std::size_t>(s)].server_id + "'");
            load[static_cast<std::size_t>(s)].add(detail::footprint(demand.at(t, p), cfg.headroom, sizing, p));
        }
        for (std::size_t s = 0; s < fleet.size(); ++s) {
            const auto& l = load[s];
            const auto& sv = fleet[s];
            if (!detail::within(l.bandwidth, sv.bandwidth_capacity) || !detail::within(l.cpu, sv.cpu_capacity) ||
                !detail::within(l.memory, sv.memory_capacity) || !detail::within(l.disk, sv.disk_capacity))
                problems.push_back("hour " + std::to_string(t) + ": server '" + sv.server_id + "' over capacity");
        }
    }
    const auto c = plan_cost(plan, demand, fleet, cfg);
    const double sum = c.energy + c.bandwidth + c.migration + c.sla_risk;
    if (std::abs(plan.cost.total - (plan.cost.energy + plan.cost.bandwidth + plan.cost.migration + plan.cost.sla_risk)) >
        1e-9 * std::max(1.0, std::abs(plan.cost.total)))
        problems.push_back("cost total is not the sum of its terms");
    if (std::abs(plan.cost.total - sum) > 1e-9 * std::max(1.0, std::abs(sum)))
        problems.push_back("stored cost " + format_double(plan.cost.total) + " != recomputed " + format_double(sum));
    return problems;
}

class InstanceTooLarge : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Exhaustive optimum over every per-hour assignment (each provider on any
/// server or unassigned), solved exactly by dynamic programming across hours.
/// Among equal-cost plans the lexicographically smallest sequence of hourly
/// assignment vectors wins (unassigned sorts first).
inline AllocationPlan brute_force_plan(const DemandMatrix& demand, const std::vector<ServerSpec>& fleet,
                                       const CostConfig& cfg, const std::vector<ContainerSizing>& sizing = {}) {
    validate(demand);
    const auto& bound = cfg.brute_force;
    const std::size_t P = demand.providers(), S = fleet.size(), T = demand.hours;
    if (P > bound.max_providers || S > bound.max_servers || T > bound.max_hours)
        throw InstanceTooLarge("instance P=" + std::to_string(P) + " S=" + std::to_string(S) + " T=" +
                               std::to_string(T) + " exceeds brute-force bound P<=" +
                               std::to_string(bound.max_providers) + " S<=" + std::to_string(bound.max_servers) +
                               " T<=" + std::to_string(bound.max_hours));
    if (!sizing.empty() && sizing.size() != P) throw InvalidArgument("sizing size mismatch");

    auto plan = empty_plan(demand.provider_ids, fleet, T);
    plan.sizing = sizing;
    if (T == 0) return plan;

    std::size_t combos = 1;
    for (std::size_t p = 0; p < P; ++p) combos *= S + 1;
    auto decode = [&](std::size_t code) {
        std::vector<int> a(P);
        for (std::size_t p = P; p-- > 0;) {
            a[p] = static_cast<int>(code % (S + 1)) - 1;
            code /= S + 1;
        }
        return a;
    };

    // Feasible assignments and their standalone cost, per hour.
    std::vector<std::vector<std::vector<int>>> options(T);
    std::vector<std::vector<double>> hour_cost(T);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t code = 0; code < combos; ++code) {
            auto a = decode(code);
            std::vector<detail::ServerLoad> load(S);
            bool ok = true;
            double cost = 0.0;
            for (std::size_t p = 0; p < P && ok; ++p) {
                if (a[p] == kUnassigned) {
                    cost += cfg.sla_penalty;
                    continue;
                }
                const auto f = detail::footprint(demand.at(t, p), cfg.headroom, sizing, p);
                auto& l = load[static_cast<std::size_t>(a[p])];
                if (!detail::fits(fleet[static_cast<std::size_t>(a[p])], l, f)) ok = false;
                l.add(f);
                cost += demand.at(t, p) * cfg.bandwidth_cost_per_mbps_hour;
            }
            if (!ok) continue;
            for (std::size_t s = 0; s < S; ++s)
                if (load[s].count > 0) cost += fleet[s].energy_cost_per_hour;
            options[t].push_back(std::move(a));
            hour_cost[t].push_back(cost);
        }
    }
    auto transition = [&](const std::vector<int>& a, const std::vector<int>& b) {
        int n = 0;
        for (std::size_t p = 0; p < P; ++p)
            if (a[p] != kUnassigned && b[p] != kUnassigned && a[p] != b[p]) ++n;
        return cfg.migration_cost * n;
    };

    // future[t][i]: cheapest cost of hours t..T-1 given option i at hour t.
    std::vector<std::vector<double>> future(T);
    future[T - 1] = hour_cost[T - 1];
    for (std::size_t t = T - 1; t-- > 0;) {
        future[t].resize(options[t].size());
        for (std::size_t i = 0; i < options[t].size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < options[t + 1].size(); ++j)
                best = std::min(best, transition(options[t][i], options[t + 1][j]) + future[t + 1][j]);
            future[t][i] = hour_cost[t][i] + best;
        }
    }
    std::size_t pick = 0;
    for (std::size_t i = 1; i < options[0].size(); ++i)
        if (future[0][i] < future[0][pick]) pick = i;
    plan.assignment[0] = options[0][pick];
    for (std::size_t t = 1; t < T; ++t) {
        std::size_t next = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < options[t].size(); ++j) {
            const double c = transition(plan.assignment[t - 1], options[t][j]) + future[t][j];
            if (c < best) {
                best = c;
                next = j;
            }
        }
        plan.assignment[t] = options[t][next];
    }
    refresh_power_state(plan);
    plan.cost = plan_cost(plan, demand, fleet, cfg);
    return plan;
}

struct ProfileClass {
    std::string class_id;
    std::vector<double> centroid;  // 24 values
    std::vector<std::string> members;
    std::optional<ContainerSizing> recommended;
};

/// Mean normalized value per UTC hour of day.
inline std::vector<double> daily_shape(const TraceSeries& trace) {
    if (trace.size() < 24)
        throw InvalidArgument("trace '" + trace.provider_id + "' shorter than 24 hours");
    const auto norm = fit_normalizer(trace);
    std::vector<double> sum(24, 0.0), count(24, 0.0);
    const auto start_hod = (trace.start - std::chrono::floor<std::chrono::days>(trace.start)).count();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto h = static_cast<std::size_t>((start_hod + static_cast<long long>(i)) % 24);
        sum[h] += normalize_value(trace.samples[i], norm);
        count[h] += 1.0;
    }
    for (std::size_t h = 0; h < 24; ++h) sum[h] /= count[h];
    return sum;
}

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

}  // namespace detail

/// Seeded K-means over daily shapes. Empty clusters are reseeded with the
/// point farthest from its centroid. Each class recommends the most common
/// sizing among its members when a catalog is given.
inline std::vector<ProfileClass> cluster_profiles(const std::vector<TraceSeries>& traces, std::size_t K,
                                                  std::uint64_t seed,
                                                  const std::vector<ContainerFlavor>& catalog = {},
                                                  const CostConfig& cfg = {}, std::size_t max_iterations = 100) {
    if (K < 1) throw InvalidArgument("K must be >= 1");
    if (K > traces.size())
        throw InvalidArgument("K=" + std::to_string(K) + " exceeds provider count " + std::to_string(traces.size()));
    const std::size_t N = traces.size();
    std::vector<std::vector<double>> shapes;
    shapes.reserve(N);
    for (const auto& t : traces) shapes.push_back(daily_shape(t));

    Rng rng(seed);
    std::vector<std::size_t> pool(N);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    rng.shuffle(pool);
    std::vector<std::vector<double>> centroids;
    for (std::size_t k = 0; k < K; ++k) centroids.push_back(shapes[pool[k]]);

    std::vector<std::size_t> label(N, K);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < N; ++i) {
            std::size_t best = 0;
            double best_d = detail::squared_distance(shapes[i], centroids[0]);
            for (std::size_t k = 1; k < K; ++k) {
                const double d = detail::squared_distance(shapes[i], centroids[k]);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            if (label[i] != best) {
                label[i] = best;
                changed = true;
            }
        }
        std::vector<std::size_t> sizes(K, 0);
        for (std::size_t i = 0; i < N; ++i) ++sizes[label[i]];
        for (std::size_t k = 0; k < K; ++k) {
            if (sizes[k] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < N; ++i) {
                if (sizes[label[i]] <= 1) continue;
                const double d = detail::squared_distance(shapes[i], centroids[label[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --sizes[label[far]];
            label[far] = k;
            sizes[k] = 1;
            changed = true;
        }
        for (std::size_t k = 0; k < K; ++k) {
            std::vector<double> c(24, 0.0);
            for (std::size_t i = 0; i < N; ++i)
                if (label[i] == k)
                    for (std::size_t h = 0; h < 24; ++h) c[h] += shapes[i][h];
            for (auto& v : c) v /= static_cast<double>(sizes[k]);
            centroids[k] = std::move(c);
        }
        if (!changed) break;
    }

    std::vector<ProfileClass> classes(K);
    for (std::size_t k = 0; k < K; ++k) {
        classes[k].class_id = "c" + std::to_string(k);
        classes[k].centroid = centroids[k];
    }
    std::vector<std::map<std::pair<std::string, std::size_t>, std::pair<std::size_t, ContainerSizing>>> votes(K);
    for (std::size_t i = 0; i < N; ++i) {
        classes[label[i]].members.push_back(traces[i].provider_id);
        if (!catalog.empty()) {
            const double peak = *std::max_element(traces[i].samples.begin(), traces[i].samples.end());
            auto sz = size_containers(peak, {}, catalog, cfg.headroom, cfg.max_container_count);
            auto& slot = votes[label[i]][{sz.flavor_id, sz.count}];
            ++slot.first;
            slot.second = sz;
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        std::size_t best = 0;
        for (const auto& [key, v] : votes[k])
            if (v.first > best) {
                best = v.first;
                classes[k].recommended = v.second;
            }
    }
    return classes;
}

// ---- File formats -------------------------------------------------------

inline constexpr std::string_view kPlanHeader = "hour,provider_id,server_id,flavor_id,container_count";
inline constexpr std::string_view kCostSummaryHeader = "energy,bandwidth,migration,sla_risk,total";

inline std::string emit_plan_csv(const AllocationPlan& plan) {
    std::string out(kPlanHeader);
    out += '\n';
    for (std::size_t t = 0; t < plan.hours; ++t)
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            const int s = plan.assignment[t][p];
            out += std::to_string(t) + ',' + plan.provider_ids[p] + ',';
            if (s != kUnassigned) out += plan.server_ids[static_cast<std::size_t>(s)];
            out += ',';
            if (!plan.sizing.empty()) out += plan.sizing[p].flavor_id + ',' + std::to_string(plan.sizing[p].count);
            else out += ",0";
            out += '\n';
        }
    return out;
}

/// Parses a plan file against the fleet (for server indices) and catalog (to
/// rebuild container footprints). Powered-on sets are derived from the
/// assignments; the cost breakdown is left zero.
inline AllocationPlan parse_plan_csv(std::string_view text, const std::vector<ServerSpec>& fleet,
                                     const std::vector<ContainerFlavor>& catalog = {}) {
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || trim(line) != kPlanHeader)
        throw ParseError(1, "expected header '" + std::string(kPlanHeader) + "'");
    std::map<std::string, int, std::less<>> server_index;
    for (std::size_t s = 0; s < fleet.size(); ++s) server_index[fleet[s].server_id] = static_cast<int>(s);
    std::map<std::string, std::size_t, std::less<>> provider_index;
    std::vector<std::string> providers;
    struct Row {
        std::size_t hour;
        std::size_t provider;
        int server;
        std::string flavor;
        std::size_t count;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::size_t max_hour = 0;
    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        const auto ln = reader.line_number();
        auto f = split_fields(line);
        if (f.size() != 5) throw ParseError(ln, "expected 5 fields, got " + std::to_string(f.size()));
        Row r{};
        r.line = ln;
        if (!parse_int(f[0], r.hour)) throw ParseError(ln, "bad hour '" + std::string(f[0]) + "'");
        auto [it, inserted] = provider_index.try_emplace(std::string(f[1]), providers.size());
        if (inserted) providers.emplace_back(f[1]);
        r.provider = it->second;
        if (f[2].empty()) {
            r.server = kUnassigned;
        } else {
            auto sit = server_index.find(f[2]);
            if (sit == server_index.end()) throw ParseError(ln, "unknown server '" + std::string(f[2]) + "'");
            r.server = sit->second;
        }
        r.flavor = std::string(f[3]);
        if (!parse_int(f[4], r.count)) throw ParseError(ln, "bad container_count '" + std::string(f[4]) + "'");
        max_hour = std::max(max_hour, r.hour);
        rows.push_back(std::move(r));
    }
    auto plan = empty_plan(providers, fleet, rows.empty() ? 0 : max_hour + 1);
    std::vector<std::vector<char>> seen(plan.hours, std::vector<char>(providers.size(), 0));
    std::vector<std::optional<std::pair<std::string, std::size_t>>> sizing(providers.size());
    for (const auto& r : rows) {
        if (seen[r.hour][r.provider]) throw ParseError(r.line, "duplicate row for provider at hour");
        seen[r.hour][r.provider] = 1;
        plan.assignment[r.hour][r.provider] = r.server;
        std::pair<std::string, std::size_t> sz{r.flavor, r.count};
        if (sizing[r.provider] && *sizing[r.provider] != sz)
            throw ParseError(r.line, "container sizing changes across hours");
        sizing[r.provider] = sz;
    }
    for (std::size_t t = 0; t < plan.hours; ++t)
        for (std::size_t p = 0; p < providers.size(); ++p)
            if (!seen[t][p]) throw ParseError(0, "missing row for provider '" + providers[p] + "' at hour " + std::to_string(t));
    const bool sized = !providers.empty() && sizing[0] && !sizing[0]->first.empty();
    if (sized) {
        for (std::size_t p = 0; p < providers.size(); ++p) {
            const auto& [fid, count] = *sizing[p];
            auto f = std::find_if(catalog.begin(), catalog.end(), [&](const auto& c) { return c.flavor_id == fid; });
            if (f == catalog.end()) throw ParseError(0, "unknown flavor '" + fid + "'");
            const auto n = static_cast<double>(count);
            plan.sizing.push_back({fid, count, n * f->cpu, n * f->memory, n * f->disk, n * f->cost_per_hour});
        }
    }
    refresh_power_state(plan);
    return plan;
}

inline std::string emit_cost_summary_csv(const CostBreakdown& c) {
    std::string out(kCostSummaryHeader);
    out += '\n';
    out += format_double(c.energy) + ',' + format_double(c.bandwidth) + ',' + format_double(c.migration) + ',' +
           format_double(c.sla_risk) + ',' + format_double(c.total) + '\n';
    return out;
}

inline std::string emit_cost_config(const CostConfig& c) {
    std::string out;
    out += "migration_cost = " + format_double(c.migration_cost) + '\n';
    out += "sla_penalty = " + format_double(c.sla_penalty) + '\n';
    out += "headroom = " + format_double(c.headroom) + '\n';
    out += "bandwidth_cost_per_mbps_hour = " + format_double(c.bandwidth_cost_per_mbps_hour) + '\n';
    out += "max_container_count = " + std::to_string(c.max_container_count) + '\n';
    out += "local_search_max_iters = " + std::to_string(c.local_search_max_iters) + '\n';
    out += "brute_force_max_providers = " + std::to_string(c.brute_force.max_providers) + '\n';
    out += "brute_force_max_servers = " + std::to_string(c.brute_force.max_servers) + '\n';
    out += "brute_force_max_hours = " + std::to_string(c.brute_force.max_hours) + '\n';
    return out;
}

/// `key = value` lines; `#` starts a comment. Unset keys keep their defaults.
inline CostConfig parse_cost_config(std::string_view text, CostConfig c = {}) {
    LineReader reader(text);
    std::string_view line;
    while (reader.next(line)) {
        const auto ln = reader.line_number();
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(ln, "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto real = [&](double& dst) {
            if (!parse_double(value, dst)) throw ParseError(ln, "bad number for '" + std::string(key) + "'");
        };
        auto count = [&](std::size_t& dst) {
            if (!parse_int(value, dst)) throw ParseError(ln, "bad integer for '" + std::string(key) + "'");
        };
        if (key == "migration_cost") real(c.migration_cost);
        else if (key == "sla_penalty") real(c.sla_penalty);
        else if (key == "headroom") real(c.headroom);
        else if (key == "bandwidth_cost_per_mbps_hour") real(c.bandwidth_cost_per_mbps_hour);
        else if (key == "max_container_count") count(c.max_container_count);
        else if (key == "local_search_max_iters") count(c.local_search_max_iters);
        else if (key == "brute_force_max_providers") count(c.brute_force.max_providers);
        else if (key == "brute_force_max_servers") count(c.brute_force.max_servers);
        else if (key == "brute_force_max_hours") count(c.brute_force.max_hours);
        else throw ParseError(ln, "unknown key '" + std::string(key) + "'");
    }
    try {
        validate(c);
    } catch (const InvalidArgument& e) {
        throw ParseError(reader.line_number(), e.what());
    }
    return c;
}

}  // namespace edgecast
