#pragma once

// Replays allocation plans against actual demand and compares planning
// strategies end to end.

#include <algorithm>
#include <cmath>
#include <atomic>
#include <future>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "edgecast/common.hpp"
#include "edgecast/lstm.hpp"
#include "edgecast/planner.hpp"
#include "edgecast/trace.hpp"

namespace edgecast {

struct Violation {
    std::size_t hour = 0;
    std::string provider_id;

    bool operator==(const Violation&) const = default;
};

struct SimulationReport {
    std::string strategy;
    CostBreakdown cost;
    std::size_t violations = 0;
    std::size_t migrations = 0;
    std::size_t server_on_hours = 0;
    std::vector<Violation> violation_log;
    std::vector<std::vector<char>> violated;  // [hour][provider]
};

/// A server-hour whose assignees' actual demand exceeds its bandwidth marks
/// every assignee violated; unassigned provider-hours are violations too.
/// Energy, bandwidth and migration are priced by plan_cost on actual demand;
/// the SLA term is sla_penalty per violation.
inline SimulationReport simulate(const AllocationPlan& plan, const DemandMatrix& actual,
                                 const std::vector<ServerSpec>& fleet, const CostConfig& cfg,
                                 std::string strategy = {}) {
    if (actual.hours != plan.hours || actual.providers() != plan.providers())
        throw InvalidArgument("plan covers " + std::to_string(plan.hours) + "h x " +
                              std::to_string(plan.providers()) + " providers but actual demand is " +
                              std::to_string(actual.hours) + "h x " + std::to_string(actual.providers()));
    if (fleet.size() != plan.servers()) throw InvalidArgument("plan and fleet sizes differ");

    SimulationReport r;
    r.strategy = std::move(strategy);
    r.violated.assign(plan.hours, std::vector<char>(plan.providers(), 0));
    for (std::size_t t = 0; t < plan.hours; ++t) {
        std::vector<double> load(fleet.size(), 0.0);
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            const int s = plan.assignment[t][p];
            if (s != kUnassigned) load[static_cast<std::size_t>(s)] += actual.at(t, p);
        }
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            const int s = plan.assignment[t][p];
            if (s == kUnassigned || load[static_cast<std::size_t>(s)] > fleet[static_cast<std::size_t>(s)].bandwidth_capacity) {
                r.violated[t][p] = 1;
                r.violation_log.push_back({t, plan.provider_ids[p]});
            }
        }
    }
    r.violations = r.violation_log.size();
    const auto base = plan_cost(plan, actual, fleet, cfg);
    r.cost = base;
    r.cost.sla_risk = static_cast<double>(r.violations) * cfg.sla_penalty;
    r.cost.total = r.cost.energy + r.cost.bandwidth + r.cost.migration + r.cost.sla_risk;
    r.migrations = migration_count(plan);
    r.server_on_hours = server_on_hours(plan);
    return r;
}

enum class ForecastMode {
    kIterated,  // one multi-step forecast from the end of the training period
    kRolling,   // a fresh one-step forecast each hour from the actual history
};

struct ComparisonOptions {
    ForecastMode forecast_mode = ForecastMode::kRolling;
    unsigned jobs = 1;
};

struct StrategyRun {
    SimulationReport report;
    DemandMatrix planned;
    AllocationPlan plan;
};

struct StrategyComparison {
    std::size_t eval_start = 0;  // first held-out hour
    DemandMatrix actual;         // held-out hours only
    std::vector<ForecastModel> models;
    std::vector<StrategyRun> runs;  // FORECAST, PERSISTENCE, STATIC, ORACLE
};

/// First held-out hour: the first test target of the chronological split.
inline std::size_t evaluation_start(std::size_t length, const TrainConfig& cfg) {
    if (length <= cfg.window_length + 1) throw InvalidArgument("trace too short for the window length");
    const std::size_t pairs = length - cfg.window_length;
    return cfg.window_length + static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(pairs)));
}

/// Trains one model per trace (seeded per provider from cfg.seed), in
/// parallel over `jobs` workers. Results keep the input order.
inline std::vector<ForecastModel> train_all(const std::vector<TraceSeries>& traces, const TrainConfig& cfg,
                                            unsigned jobs = 1) {
    std::vector<ForecastModel> models(traces.size());
    auto work = [&](std::size_t i) {
        TrainConfig c = cfg;
        c.seed = derive_seed(cfg.seed, traces[i].provider_id);
        models[i] = train(traces[i], c);
    };
    jobs = std::max(1u, jobs);
    if (jobs == 1 || traces.size() <= 1) {
        for (std::size_t i = 0; i < traces.size(); ++i) work(i);
        return models;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < std::min<std::size_t>(jobs, traces.size()); ++w)
        workers.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next++; i < traces.size(); i = next++) work(i);
        }));
    for (auto& f : workers) f.get();
    return models;
}

/// Trains on the pre-horizon part of each trace, then plans and replays four
/// demand views of the held-out horizon: FORECAST (model output),
/// PERSISTENCE (previous hour's actual), STATIC (training-period peak) and
/// ORACLE (the actual demand).
inline StrategyComparison run_strategy_comparison(const std::vector<TraceSeries>& traces,
                                                  const std::vector<ServerSpec>& fleet,
                                                  const std::vector<ContainerFlavor>& catalog,
                                                  const CostConfig& cost_cfg, const TrainConfig& train_cfg,
                                                  const ComparisonOptions& opts = {}) {
    if (traces.empty()) throw InvalidArgument("no traces");
    const std::size_t N = traces.front().size();
    for (const auto& t : traces)
        if (t.size() != N || t.start != traces.front().start)
            throw InvalidArgument("all traces must share start and length for strategy comparison");

    StrategyComparison out;
    out.eval_start = evaluation_start(N, train_cfg);
    const std::size_t horizon = N - out.eval_start;
    if (horizon == 0 || out.eval_start <= train_cfg.window_length + 1)
        throw InvalidArgument("insufficient trace length for training plus an evaluation horizon");

    std::vector<TraceSeries> history;
    for (const auto& t : traces) history.push_back(slice_hours(t, 0, out.eval_start));
    out.models = train_all(history, train_cfg, opts.jobs);
    out.actual = demand_from_traces(traces, out.eval_start, horizon);

    const auto ids = out.actual.provider_ids;
    const std::size_t L = train_cfg.window_length;
    DemandMatrix forecast(ids, horizon), persistence(ids, horizon), fixed(ids, horizon);
    for (std::size_t p = 0; p < traces.size(); ++p) {
        const auto& x = traces[p].samples;
        if (opts.forecast_mode == ForecastMode::kIterated) {
            const auto recent = std::span<const double>(x).subspan(out.eval_start - L, L);
            const auto pred = predict_horizon(out.models[p], recent, horizon);
            for (std::size_t t = 0; t < horizon; ++t) forecast.at(t, p) = pred[t];
        } else {
            for (std::size_t t = 0; t < horizon; ++t)
                forecast.at(t, p) =
                    predict_next(out.models[p], std::span<const double>(x).subspan(out.eval_start + t - L, L));
        }
        const double peak = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(out.eval_start));
        for (std::size_t t = 0; t < horizon; ++t) {
            forecast.at(t, p) = std::max(0.0, forecast.at(t, p));
            persistence.at(t, p) = x[out.eval_start + t - 1];
            fixed.at(t, p) = peak;
        }
    }

    auto run = [&](std::string name, DemandMatrix planned) {
        auto plan = plan_horizon(planned, fleet, catalog, cost_cfg);
        auto report = simulate(plan, out.actual, fleet, cost_cfg, std::move(name));
        out.runs.push_back({std::move(report), std::move(planned), std::move(plan)});
    };
    run("FORECAST", std::move(forecast));
    run("PERSISTENCE", std::move(persistence));
    run("STATIC", std::move(fixed));
    run("ORACLE", out.actual);
    return out;
}

inline constexpr std::string_view kComparisonHeader =
    "strategy,total_cost,energy,bandwidth,migration,sla,violations,migrations,server_on_hours";
inline constexpr std::string_view kPlotHeader = "hour,provider_id,actual_mbps,forecast_mbps,server_id,violated";

inline std::string emit_report(const std::vector<SimulationReport>& reports) {
    std::string out(kComparisonHeader);
    out += '\n';
    for (const auto& r : reports) {
        out += r.strategy + ',' + format_double(r.cost.total) + ',' + format_double(r.cost.energy) + ',' +
               format_double(r.cost.bandwidth) + ',' + format_double(r.cost.migration) + ',' +
               format_double(r.cost.sla_risk) + ',' + std::to_string(r.violations) + ',' +
               std::to_string(r.migrations) + ',' + std::to_string(r.server_on_hours) + '\n';
    }
    return out;
}

/// Reads back the numeric columns of a comparison CSV (logs are not stored).
inline std::vector<SimulationReport> parse_report(std::string_view text) {
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || trim(line) != kComparisonHeader)
        throw ParseError(1, "expected header '" + std::string(kComparisonHeader) + "'");
    std::vector<SimulationReport> out;
    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        const auto ln = reader.line_number();
        auto f = split_fields(line);
        if (f.size() != 9) throw ParseError(ln, "expected 9 fields");
        SimulationReport r;
        r.strategy = std::string(f[0]);
        if (!parse_double(f[1], r.cost.total) || !parse_double(f[2], r.cost.energy) ||
            !parse_double(f[3], r.cost.bandwidth) || !parse_double(f[4], r.cost.migration) ||
            !parse_double(f[5], r.cost.sla_risk) || !parse_int(f[6], r.violations) ||
            !parse_int(f[7], r.migrations) || !parse_int(f[8], r.server_on_hours))
            throw ParseError(ln, "bad numeric field");
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string emit_plot_data(const StrategyRun& run, const DemandMatrix& actual) {
    std::string out(kPlotHeader);
    out += '\n';
    const auto& plan = run.plan;
    for (std::size_t t = 0; t < plan.hours; ++t)
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            const int s = plan.assignment[t][p];
            out += std::to_string(t) + ',' + plan.provider_ids[p] + ',' + format_double(actual.at(t, p)) + ',' +
                   format_double(run.planned.at(t, p)) + ',' +
                   (s == kUnassigned ? std::string() : plan.server_ids[static_cast<std::size_t>(s)]) + ',' +
                   (run.report.violated[t][p] ? "1" : "0") + '\n';
        }
    return out;
}

}  // namespace edgecast
