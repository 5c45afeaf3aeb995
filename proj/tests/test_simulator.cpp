#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace edgecast;

namespace {

std::vector<ServerSpec> uniform_fleet(std::size_t n, double cap) {
    std::vector<ServerSpec> f;
    for (std::size_t s = 0; s < n; ++s) f.push_back({"s" + std::to_string(s), cap, 64, 256, 2000, 10});
    return f;
}

DemandMatrix filled(std::size_t P, std::size_t T, double v) {
    std::vector<std::string> ids;
    for (std::size_t p = 0; p < P; ++p) ids.push_back("p" + std::to_string(p));
    DemandMatrix d(ids, T);
    std::fill(d.values.begin(), d.values.end(), v);
    return d;
}

StrategyComparison small_comparison() {
    SynthConfig sc;
    sc.provider_count = 4;
    sc.days = 5;
    sc.seed = 42;
    TrainConfig tc;
    tc.hidden_size = 8;
    tc.epochs = 10;
    tc.seed = 7;
    CostConfig cc;
    cc.sla_penalty = 20;
    return run_strategy_comparison(generate_synthetic_traces(sc), uniform_fleet(3, 500), {}, cc, tc);
}

}  // namespace

TEST(Simulate, OverloadMarksEveryAssignee) {
    const auto fleet = uniform_fleet(1, 10);
    CostConfig cfg;
    cfg.sla_penalty = 7;
    auto plan = empty_plan({"a", "b"}, fleet, 1);
    plan.assignment[0] = {0, 0};
    refresh_power_state(plan);
    DemandMatrix actual({"a", "b"}, 1);
    actual.values = {6, 6};
    const auto r = simulate(plan, actual, fleet, cfg, "X");
    EXPECT_EQ(r.violations, 2u);
    EXPECT_EQ(r.violation_log.size(), 2u);
    EXPECT_EQ(r.cost.sla_risk, 14.0);
    EXPECT_EQ(r.cost.energy, 10.0);
    EXPECT_EQ(r.strategy, "X");
}

TEST(Simulate, PlannedDemandReplaysClean) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto in = oracle::random_instance(rng);
        const auto plan = plan_horizon(in.demand, in.fleet, {}, in.cost);
        const auto r = simulate(plan, in.demand, in.fleet, in.cost, "ORACLE");
        EXPECT_EQ(r.violations, oracle::unassigned(plan));
        EXPECT_EQ(r.migrations, migration_count(plan));
        EXPECT_NEAR(r.cost.total, plan.cost.total, 1e-9);
    }
}

TEST(Simulate, MatchesRecountOracle) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto in = oracle::random_instance(rng);
        const auto plan = plan_horizon(in.demand, in.fleet, {}, in.cost);
        auto actual = in.demand;
        for (auto& v : actual.values) v *= rng.uniform(0.5, 2.0);
        const auto r = simulate(plan, actual, in.fleet, in.cost, "S");
        const auto v = oracle::violations(plan, actual, in.fleet);
        std::size_t n = 0;
        for (std::size_t t = 0; t < plan.hours; ++t)
            for (std::size_t p = 0; p < plan.providers(); ++p) {
                EXPECT_EQ(r.violated[t][p], v[t][p]);
                n += static_cast<std::size_t>(v[t][p]);
            }
        EXPECT_EQ(r.violations, n);
        const auto base = oracle::plan_cost(plan, actual, in.fleet, in.cost);
        EXPECT_NEAR(r.cost.energy, base.energy, 1e-9);
        EXPECT_NEAR(r.cost.bandwidth, base.bandwidth, 1e-9);
        EXPECT_NEAR(r.cost.migration, base.migration, 1e-9);
        EXPECT_NEAR(r.cost.sla_risk, n * in.cost.sla_penalty, 1e-9);
    }
}

TEST(Simulate, MoreDemandNeverFewerViolations) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto in = oracle::random_instance(rng);
        const auto plan = plan_horizon(in.demand, in.fleet, {}, in.cost);
        auto actual = in.demand;
        for (auto& v : actual.values) v *= rng.uniform(0.8, 1.5);
        auto more = actual;
        for (auto& v : more.values) v *= 1.3;
        EXPECT_GE(simulate(plan, more, in.fleet, in.cost, "").violations,
                  simulate(plan, actual, in.fleet, in.cost, "").violations);
    }
}

TEST(Simulate, DimensionMismatch) {
    const auto fleet = uniform_fleet(1, 10);
    const auto plan = empty_plan({"a"}, fleet, 2);
    EXPECT_THROW(simulate(plan, filled(1, 3, 1), fleet, {}, ""), InvalidArgument);
}

TEST(Report, EmitAndParse) {
    EXPECT_EQ(emit_report({}), std::string(kComparisonHeader) + "\n");
    SimulationReport r;
    r.strategy = "ORACLE";
    r.cost = {10, 0.5, 2, 40, 52.5};
    r.violations = 2;
    r.migrations = 2;
    r.server_on_hours = 1;
    const auto text = emit_report({r});
    EXPECT_EQ(text, std::string(kComparisonHeader) + "\nORACLE,52.5,10,0.5,2,40,2,2,1\n");
    const auto back = parse_report(text);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].cost, r.cost);
    EXPECT_EQ(back[0].violations, 2u);
    EXPECT_EQ(emit_report(back), text);
    EXPECT_THROW(parse_report("strategy\n"), ParseError);
    EXPECT_THROW(parse_report(std::string(kComparisonHeader) + "\nX,1,1\n"), ParseError);
}

TEST(Comparison, FourStrategiesWithConsistentLogs) {
    const auto cmp = small_comparison();
    ASSERT_EQ(cmp.runs.size(), 4u);
    const char* names[] = {"FORECAST", "PERSISTENCE", "STATIC", "ORACLE"};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(cmp.runs[i].report.strategy, names[i]);
    EXPECT_EQ(cmp.eval_start, 24 + static_cast<std::size_t>(0.8 * (120 - 24)));
    EXPECT_EQ(cmp.actual.hours, 120 - cmp.eval_start);

    const auto& oracle_run = cmp.runs[3].report;
    const auto& static_run = cmp.runs[2].report;
    EXPECT_EQ(oracle_run.violations, 0u);
    EXPECT_GE(static_run.server_on_hours, oracle_run.server_on_hours);
    for (const auto& run : cmp.runs) {
        const auto fleet = uniform_fleet(3, 500);
        const auto back = parse_plan_csv(emit_plan_csv(run.plan), fleet);
        EXPECT_EQ(migration_count(back), run.report.migrations);
        EXPECT_EQ(server_on_hours(back), run.report.server_on_hours);
        const auto v = oracle::violations(back, cmp.actual, fleet);
        std::size_t n = 0;
        for (const auto& row : v) n += static_cast<std::size_t>(std::count(row.begin(), row.end(), 1));
        EXPECT_EQ(n, run.report.violations);
        const auto plot = emit_plot_data(run, cmp.actual);
        EXPECT_EQ(static_cast<std::size_t>(std::count(plot.begin(), plot.end(), '\n')),
                  1 + cmp.actual.hours * cmp.actual.providers());
    }
}

TEST(Comparison, DeterministicAndJobIndependent) {
    SynthConfig sc;
    sc.provider_count = 3;
    sc.days = 4;
    TrainConfig tc;
    tc.hidden_size = 4;
    tc.epochs = 3;
    const auto traces = generate_synthetic_traces(sc);
    const auto a = run_strategy_comparison(traces, uniform_fleet(2, 500), {}, {}, tc);
    const auto b = run_strategy_comparison(traces, uniform_fleet(2, 500), {}, {}, tc, {ForecastMode::kRolling, 3});
    ASSERT_EQ(a.models.size(), b.models.size());
    for (std::size_t i = 0; i < a.models.size(); ++i) EXPECT_EQ(a.models[i], b.models[i]);
    std::vector<SimulationReport> ra, rb;
    for (const auto& r : a.runs) ra.push_back(r.report);
    for (const auto& r : b.runs) rb.push_back(r.report);
    EXPECT_EQ(emit_report(ra), emit_report(rb));
}

TEST(Comparison, IteratedModeUsesMultiStepForecast) {
    SynthConfig sc;
    sc.provider_count = 2;
    sc.days = 4;
    TrainConfig tc;
    tc.hidden_size = 4;
    tc.epochs = 3;
    const auto traces = generate_synthetic_traces(sc);
    const auto cmp = run_strategy_comparison(traces, uniform_fleet(2, 500), {}, {}, tc, {ForecastMode::kIterated, 1});
    const std::size_t L = tc.window_length, e = cmp.eval_start;
    for (std::size_t p = 0; p < traces.size(); ++p) {
        const auto recent = std::span<const double>(traces[p].samples).subspan(e - L, L);
        const auto pred = predict_horizon(cmp.models[p], recent, cmp.actual.hours);
        for (std::size_t t = 0; t < cmp.actual.hours; ++t) EXPECT_EQ(cmp.runs[0].planned.at(t, p), pred[t]);
    }
}
