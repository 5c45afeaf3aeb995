// edgecast command-line driver: gen, train, predict, evaluate, plan, simulate.
//
// Exit codes: 0 success, 1 domain or I/O error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgecast/edgecast.hpp"

namespace fs = std::filesystem;
using namespace edgecast;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

struct Common {
    std::uint64_t seed = 0;
    std::string out = ".";
    unsigned jobs = 1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "root random seed")->capture_default_str();
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--jobs", c.jobs, "worker threads for per-provider work")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_train_options(CLI::App* cmd, TrainConfig& t) {
    cmd->add_option("--window", t.window_length, "window length L (hours)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--hidden", t.hidden_size, "LSTM hidden size")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--epochs", t.epochs, "training epochs")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--lr", t.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--beta1", t.adam_beta1, "Adam beta1")->capture_default_str();
    cmd->add_option("--beta2", t.adam_beta2, "Adam beta2")->capture_default_str();
    cmd->add_option("--adam-eps", t.adam_epsilon, "Adam epsilon")->capture_default_str();
    cmd->add_option("--huber-delta", t.huber_delta, "Huber delta (normalized units)")->capture_default_str();
    cmd->add_option("--batch", t.batch_size, "minibatch size")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--clip", t.gradient_clip_norm, "global gradient-norm clip")->capture_default_str();
    cmd->add_option("--train-fraction", t.train_fraction, "chronological train share")->capture_default_str();
    cmd->add_option("--hampel-window", t.hampel_window, "outlier filter window (odd)")->capture_default_str();
    cmd->add_option("--hampel-k", t.hampel_k, "outlier filter threshold")->capture_default_str();
    cmd->add_flag("--early-stop", t.early_stop, "stop on train-loss plateau");
    cmd->add_option("--patience", t.early_stop_patience, "plateau length in epochs")->capture_default_str();
    cmd->add_option("--tolerance", t.early_stop_tolerance, "relative improvement counted as plateau")
        ->capture_default_str();
}

struct CostOptions {
    std::string file;
    std::optional<double> migration, sla, headroom, bandwidth;
    std::optional<std::size_t> max_iters;

    CostConfig resolve() const {
        CostConfig c;
        if (!file.empty()) c = parse_cost_config(read_file(file));
        if (migration) c.migration_cost = *migration;
        if (sla) c.sla_penalty = *sla;
        if (headroom) c.headroom = *headroom;
        if (bandwidth) c.bandwidth_cost_per_mbps_hour = *bandwidth;
        if (max_iters) c.local_search_max_iters = *max_iters;
        validate(c);
        return c;
    }
};

void add_cost_options(CLI::App* cmd, CostOptions& c) {
    cmd->add_option("--cost-config", c.file, "cost config file (key = value)")->check(CLI::ExistingFile);
    cmd->add_option("--migration-cost", c.migration, "cost per provider move");
    cmd->add_option("--sla-penalty", c.sla, "cost per violated provider-hour");
    cmd->add_option("--headroom", c.headroom, "capacity safety multiplier (>= 1)");
    cmd->add_option("--bandwidth-cost", c.bandwidth, "cost per Mbps-hour");
    cmd->add_option("--local-search-iters", c.max_iters, "cap on accepted local-search moves");
}

std::vector<TraceSeries> load_traces(const std::string& path) { return parse_trace_csv(read_file(path)); }

fs::path model_path(const fs::path& dir, const std::string& id) { return dir / (id + ".model.json"); }

std::vector<ForecastModel> load_models(const fs::path& dir, const std::vector<TraceSeries>& traces) {
    std::vector<ForecastModel> models;
    for (const auto& t : traces) {
        const auto path = model_path(dir, t.provider_id);
        if (!fs::exists(path)) throw Error("no model for provider '" + t.provider_id + "' (" + path.string() + ")");
        models.push_back(load_model(read_file(path)));
    }
    return models;
}

std::string emit_loss_history(const std::vector<ForecastModel>& models) {
    std::string out = "provider_id,epoch,loss\n";
    for (const auto& m : models)
        for (std::size_t e = 0; e < m.training_loss_history.size(); ++e)
            out += m.provider_id + ',' + std::to_string(e) + ',' + format_double(m.training_loss_history[e]) + '\n';
    return out;
}

std::string emit_demand_csv(const DemandMatrix& d) {
    std::string out = "hour,provider_id,demand_mbps\n";
    for (std::size_t t = 0; t < d.hours; ++t)
        for (std::size_t p = 0; p < d.providers(); ++p)
            out += std::to_string(t) + ',' + d.provider_ids[p] + ',' + format_double(d.at(t, p)) + '\n';
    return out;
}

std::string emit_profiles_csv(const std::vector<ProfileClass>& classes) {
    std::string out = "class_id,provider_id,flavor_id,container_count\n";
    for (const auto& c : classes)
        for (const auto& m : c.members)
            out += c.class_id + ',' + m + ',' + (c.recommended ? c.recommended->flavor_id : std::string()) + ',' +
                   std::to_string(c.recommended ? c.recommended->count : 0) + '\n';
    return out;
}

std::vector<ServerSpec> default_fleet(std::size_t n) {
    std::vector<ServerSpec> fleet;
    for (std::size_t i = 0; i < n; ++i) fleet.push_back({"s" + std::to_string(i), 500, 64, 256, 2000, 10});
    return fleet;
}

std::vector<ContainerFlavor> default_catalog() {
    return {{"small", 2, 4, 20, 50, 1.0}, {"large", 4, 8, 40, 100, 1.8}};
}

HourStamp parse_date(const std::string& text) {
    HourStamp t;
    if (parse_timestamp(text, t)) return t;
    if (parse_timestamp(text + "T00:00:00Z", t)) return t;
    throw CLI::ValidationError("date", "expected YYYY-MM-DD or YYYY-MM-DDTHH:00:00Z, got '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-provider bandwidth forecasting and edge-server allocation planning"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key = value file with one [section] per subcommand; flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);

    // gen
    Common gen_c;
    SynthConfig synth;
    std::string gen_start = "2020-12-12", gen_end;
    std::size_t gen_servers = 5;
    auto* gen = app.add_subcommand("gen", "generate synthetic traces plus a default fleet and flavor catalog");
    add_common(gen, gen_c);
    gen->add_option("--providers", synth.provider_count, "number of providers")->check(CLI::PositiveNumber)->capture_default_str();
    auto* days_opt = gen->add_option("--days", synth.days, "days of hourly samples")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--start", gen_start, "first day (UTC)")->capture_default_str();
    gen->add_option("--end", gen_end, "last day, inclusive (UTC); overrides --days")->excludes(days_opt);
    gen->add_option("--base", synth.base_level, "base level (Mbps)")->capture_default_str();
    gen->add_option("--amplitude", synth.diurnal_amplitude, "diurnal amplitude (Mbps)")->capture_default_str();
    gen->add_option("--noise", synth.noise_std, "Gaussian noise std (Mbps)")->capture_default_str();
    gen->add_option("--burst-prob", synth.burst_probability, "per-hour burst probability")->capture_default_str();
    gen->add_option("--burst-mult", synth.burst_multiplier, "burst multiplier")->capture_default_str();
    gen->add_option("--phase-jitter", synth.phase_jitter, "max provider phase offset (radians)")->capture_default_str();
    gen->add_option("--servers", gen_servers, "servers in the default fleet file")->check(CLI::PositiveNumber)->capture_default_str();

    // train
    Common train_c;
    TrainConfig train_cfg;
    std::string train_traces;
    auto* train_cmd = app.add_subcommand("train", "train one forecasting model per provider");
    add_common(train_cmd, train_c);
    train_cmd->add_option("--traces", train_traces, "trace CSV")->required()->check(CLI::ExistingFile);
    add_train_options(train_cmd, train_cfg);

    // predict
    Common pred_c;
    std::string pred_traces, pred_models;
    std::size_t pred_horizon = 24;
    auto* pred = app.add_subcommand("predict", "iterated forecast of the hours after each trace ends");
    add_common(pred, pred_c);
    pred->add_option("--traces", pred_traces, "trace CSV (history)")->required()->check(CLI::ExistingFile);
    pred->add_option("--models", pred_models, "directory of model files")->required()->check(CLI::ExistingDirectory);
    pred->add_option("--horizon", pred_horizon, "hours to forecast")->check(CLI::PositiveNumber)->capture_default_str();

    // evaluate
    Common eval_c;
    std::string eval_traces, eval_models;
    auto* eval = app.add_subcommand("evaluate", "test-split metrics for each model and the persistence baseline");
    add_common(eval, eval_c);
    eval->add_option("--traces", eval_traces, "trace CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--models", eval_models, "directory of model files")->required()->check(CLI::ExistingDirectory);

    // plan
    Common plan_c;
    CostOptions plan_cost_opt;
    std::string plan_traces, plan_models, plan_fleet, plan_catalog;
    std::size_t plan_horizon_hours = 24, plan_from = 0, plan_profiles = 0;
    bool plan_strict = false, plan_verify = false;
    auto* plan_cmd = app.add_subcommand("plan", "allocation plan over forecast (or given) demand");
    add_common(plan_cmd, plan_c);
    plan_cmd->add_option("--traces", plan_traces, "trace CSV (history, or the demand itself without --models)")
        ->required()
        ->check(CLI::ExistingFile);
    plan_cmd->add_option("--models", plan_models, "forecast demand with these models")->check(CLI::ExistingDirectory);
    plan_cmd->add_option("--fleet", plan_fleet, "fleet CSV")->required()->check(CLI::ExistingFile);
    plan_cmd->add_option("--catalog", plan_catalog, "flavor catalog CSV")->required()->check(CLI::ExistingFile);
    plan_cmd->add_option("--horizon", plan_horizon_hours, "hours to plan")->check(CLI::PositiveNumber)->capture_default_str();
    plan_cmd->add_option("--from", plan_from, "first trace hour used as demand (without --models)")->capture_default_str();
    plan_cmd->add_option("--profiles", plan_profiles, "also cluster providers into this many profile classes");
    plan_cmd->add_flag("--strict", plan_strict, "fail if any provider-hour is unassigned");
    plan_cmd->add_flag("--verify", plan_verify, "re-read the written plan file and check every invariant");
    add_cost_options(plan_cmd, plan_cost_opt);

    // simulate
    Common sim_c;
    CostOptions sim_cost_opt;
    TrainConfig sim_train;
    std::string sim_traces, sim_fleet, sim_catalog, sim_mode = "rolling";
    auto* sim = app.add_subcommand("simulate", "train, plan and replay FORECAST/PERSISTENCE/STATIC/ORACLE");
    add_common(sim, sim_c);
    sim->add_option("--traces", sim_traces, "trace CSV")->required()->check(CLI::ExistingFile);
    sim->add_option("--fleet", sim_fleet, "fleet CSV")->required()->check(CLI::ExistingFile);
    sim->add_option("--catalog", sim_catalog, "flavor catalog CSV")->required()->check(CLI::ExistingFile);
    sim->add_option("--forecast-mode", sim_mode, "rolling (one step per hour) or iterated")
        ->check(CLI::IsMember({"rolling", "iterated"}))
        ->capture_default_str();
    add_train_options(sim, sim_train);
    add_cost_options(sim, sim_cost_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) {
            synth.seed = gen_c.seed;
            synth.start = parse_date(gen_start);
            if (!gen_end.empty()) {
                const auto end = parse_date(gen_end);
                if (end < synth.start) throw CLI::ValidationError("--end", "end date precedes start date");
                synth.days = static_cast<int>((end - synth.start).count() / 24) + 1;
            }
            const auto traces = generate_synthetic_traces(synth);
            const fs::path out = gen_c.out;
            write_file(out / "traces.csv", emit_trace_csv(traces));
            write_file(out / "fleet.csv", emit_fleet_csv(default_fleet(gen_servers)));
            write_file(out / "catalog.csv", emit_catalog_csv(default_catalog()));
            std::printf("%zu providers, %zu samples each\n", traces.size(), traces.front().size());
        } else if (*train_cmd) {
            train_cfg.seed = train_c.seed;
            validate(train_cfg);
            const auto traces = load_traces(train_traces);
            const auto models = train_all(traces, train_cfg, train_c.jobs);
            const fs::path out = train_c.out;
            for (const auto& m : models) write_file(model_path(out, m.provider_id), save_model(m));
            write_file(out / "loss_history.csv", emit_loss_history(models));
            std::printf("trained %zu models\n", models.size());
        } else if (*pred) {
            const auto traces = load_traces(pred_traces);
            const auto models = load_models(pred_models, traces);
            std::vector<TraceSeries> forecast;
            for (std::size_t p = 0; p < traces.size(); ++p) {
                const std::size_t L = models[p].config.window_length;
                const auto& x = traces[p].samples;
                if (x.size() < L)
                    throw Error("trace '" + traces[p].provider_id + "' shorter than window length " + std::to_string(L));
                TraceSeries f;
                f.provider_id = traces[p].provider_id;
                f.start = traces[p].time_at(x.size());
                f.samples = predict_horizon(models[p], std::span<const double>(x).subspan(x.size() - L), pred_horizon);
                for (auto& v : f.samples) v = std::max(0.0, v);
                forecast.push_back(std::move(f));
            }
            write_file(fs::path(pred_c.out) / "forecast.csv", emit_trace_csv(forecast));
            std::printf("forecast %zu providers x %zu hours\n", forecast.size(), pred_horizon);
        } else if (*eval) {
            const auto traces = load_traces(eval_traces);
            const auto models = load_models(eval_models, traces);
            std::vector<EvalReport> reports;
            for (std::size_t p = 0; p < traces.size(); ++p) {
                const auto data = prepare_data(traces[p], models[p].config, models[p].norm);
                reports.push_back(evaluate(models[p], data.test));
                reports.push_back(persistence_baseline(data.test, traces[p].provider_id, models[p].norm));
            }
            const fs::path out = eval_c.out;
            write_file(out / "eval.csv", emit_eval_csv(reports));
            write_file(out / "residuals.csv", emit_residual_csv(reports));
            std::printf("evaluated %zu providers\n", traces.size());
        } else if (*plan_cmd) {
            const auto cost = plan_cost_opt.resolve();
            const auto traces = load_traces(plan_traces);
            const auto fleet = parse_fleet_csv(read_file(plan_fleet));
            const auto catalog = parse_catalog_csv(read_file(plan_catalog));
            DemandMatrix demand;
            if (!plan_models.empty()) {
                const auto models = load_models(plan_models, traces);
                std::vector<std::string> ids;
                for (const auto& t : traces) ids.push_back(t.provider_id);
                demand = DemandMatrix(ids, plan_horizon_hours);
                for (std::size_t p = 0; p < traces.size(); ++p) {
                    const std::size_t L = models[p].config.window_length;
                    const auto& x = traces[p].samples;
                    if (x.size() < L)
                        throw Error("trace '" + traces[p].provider_id + "' shorter than window length " +
                                    std::to_string(L));
                    const auto f = predict_horizon(models[p], std::span<const double>(x).subspan(x.size() - L),
                                                   plan_horizon_hours);
                    for (std::size_t t = 0; t < plan_horizon_hours; ++t) demand.at(t, p) = std::max(0.0, f[t]);
                }
            } else {
                demand = demand_from_traces(traces, plan_from, plan_horizon_hours);
            }
            const auto plan = plan_horizon(demand, fleet, catalog, cost);
            const fs::path out = plan_c.out;
            write_file(out / "plan.csv", emit_plan_csv(plan));
            write_file(out / "cost_summary.csv", emit_cost_summary_csv(plan.cost));
            write_file(out / "demand.csv", emit_demand_csv(demand));
            if (plan_profiles > 0) {
                const auto classes = cluster_profiles(traces, plan_profiles, plan_c.seed, catalog, cost);
                write_file(out / "profiles.csv", emit_profiles_csv(classes));
            }
            std::size_t unassigned = 0;
            for (const auto& row : plan.assignment)
                for (int s : row) unassigned += s == kUnassigned;
            std::printf("planned %zu providers x %zu hours: total cost %s, %zu migrations, %zu unassigned\n",
                        plan.providers(), plan.hours, format_double(plan.cost.total).c_str(), migration_count(plan),
                        unassigned);
            if (plan_verify) {
                auto reread = parse_plan_csv(read_file(out / "plan.csv"), fleet, catalog);
                reread.cost = plan_cost(reread, demand, fleet, cost);
                const auto problems = verify_plan(reread, demand, fleet, cost);
                for (const auto& p : problems) std::fprintf(stderr, "verify: %s\n", p.c_str());
                if (!problems.empty()) return 1;
                std::printf("verify: ok\n");
            }
            if (plan_strict && unassigned > 0) {
                std::fprintf(stderr, "error: %zu provider-hours unassigned (--strict)\n", unassigned);
                return 1;
            }
        } else if (*sim) {
            const auto cost = sim_cost_opt.resolve();
            sim_train.seed = sim_c.seed;
            validate(sim_train);
            const auto traces = load_traces(sim_traces);
            const auto fleet = parse_fleet_csv(read_file(sim_fleet));
            const auto catalog = parse_catalog_csv(read_file(sim_catalog));
            ComparisonOptions opts;
            opts.forecast_mode = sim_mode == "iterated" ? ForecastMode::kIterated : ForecastMode::kRolling;
            opts.jobs = sim_c.jobs;
            const auto result = run_strategy_comparison(traces, fleet, catalog, cost, sim_train, opts);
            const fs::path out = sim_c.out;
            std::vector<SimulationReport> reports;
            for (const auto& run : result.runs) {
                reports.push_back(run.report);
                write_file(out / ("plan_" + run.report.strategy + ".csv"), emit_plan_csv(run.plan));
                write_file(out / ("plot_" + run.report.strategy + ".csv"), emit_plot_data(run, result.actual));
            }
            const auto table = emit_report(reports);
            write_file(out / "comparison.csv", table);
            std::fputs(table.c_str(), stdout);
        }
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
