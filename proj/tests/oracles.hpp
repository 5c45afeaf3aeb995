#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance binary. Written for obviousness, not speed.

#include <algorithm>
#include <cmath>
#include <vector>

#include "edgecast/edgecast.hpp"

namespace oracle {

using namespace edgecast;

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Row r of gate k applied to [x; h].
inline double gate_pre(const LstmParams& p, std::size_t k, std::size_t r, double x, const std::vector<double>& h) {
    const std::size_t H = p.hidden;
    double z = p.biases[k][r];
    z += p.weights[k][r * (H + 1)] * x;
    for (std::size_t j = 0; j < H; ++j) z += p.weights[k][r * (H + 1) + 1 + j] * h[j];
    return z;
}

inline void cell(const LstmParams& p, double x, std::vector<double>& h, std::vector<double>& c) {
    const std::size_t H = p.hidden;
    std::vector<double> in(H), forget(H), out(H), cand(H);
    for (std::size_t r = 0; r < H; ++r) {
        in[r] = logistic(gate_pre(p, 0, r, x, h));
        forget[r] = logistic(gate_pre(p, 1, r, x, h));
        out[r] = logistic(gate_pre(p, 2, r, x, h));
        cand[r] = std::tanh(gate_pre(p, 3, r, x, h));
    }
    for (std::size_t r = 0; r < H; ++r) c[r] = forget[r] * c[r] + in[r] * cand[r];
    for (std::size_t r = 0; r < H; ++r) h[r] = out[r] * std::tanh(c[r]);
}

inline double forward(const LstmParams& p, const std::vector<double>& window) {
    std::vector<double> h(p.hidden, 0.0), c(p.hidden, 0.0);
    for (double x : window) cell(p, x, h, c);
    double z = p.head_bias;
    for (std::size_t r = 0; r < p.hidden; ++r) z += p.head_weights[r] * h[r];
    return z > 0 ? z : 0.0;
}

inline double huber(double y, double yhat, double delta) {
    const double e = yhat - y;
    return std::abs(e) <= delta ? 0.5 * e * e : delta * (std::abs(e) - 0.5 * delta);
}

inline LstmParams random_params(std::size_t H, Rng& rng, double scale) {
    auto p = LstmParams::zeros(H);
    p.visit([&](std::span<double> s) {
        for (auto& v : s) v = rng.uniform(-scale, scale);
    });
    return p;
}

struct GradCheck {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst_rel = 0.0;
};

// Central differences of huber(target, forward(window)) against the analytic
// gradient, on every coordinate whose analytic magnitude exceeds `floor`.
inline GradCheck check_gradient(const LstmParams& p, const std::vector<double>& window, double target, double delta,
                                double step = 1e-5, double tol = 1e-4, double floor = 1e-8) {
    const auto analytic = backward_window(p, window, target, delta).grad.flatten();
    auto flat = p.flatten();
    LstmParams probe = p;
    GradCheck out;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double saved = flat[i];
        flat[i] = saved + step;
        probe.assign_flat(flat);
        const double up = huber(target, forward(probe, window), delta);
        flat[i] = saved - step;
        probe.assign_flat(flat);
        const double down = huber(target, forward(probe, window), delta);
        flat[i] = saved;
        const double numeric = (up - down) / (2 * step);
        const double a = analytic[i];
        if (std::abs(a) <= floor) continue;
        ++out.checked;
        const double rel = std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
        out.worst_rel = std::max(out.worst_rel, rel);
        if (rel > tol) ++out.failures;
    }
    return out;
}

// Straight per-term recomputation of the four-term plan cost.
inline CostBreakdown plan_cost(const AllocationPlan& plan, const DemandMatrix& d, const std::vector<ServerSpec>& fleet,
                               const CostConfig& cfg) {
    CostBreakdown c;
    for (std::size_t t = 0; t < plan.hours; ++t) {
        for (std::size_t s = 0; s < fleet.size(); ++s) {
            bool used = false;
            for (std::size_t p = 0; p < plan.providers(); ++p) used = used || plan.assignment[t][p] == int(s);
            if (used) c.energy += fleet[s].energy_cost_per_hour;
        }
        for (std::size_t p = 0; p < plan.providers(); ++p) {
            const int s = plan.assignment[t][p];
            if (s < 0) c.sla_risk += cfg.sla_penalty;
            else c.bandwidth += d.at(t, p) * cfg.bandwidth_cost_per_mbps_hour;
            if (t > 0) {
                const int before = plan.assignment[t - 1][p];
                if (before >= 0 && s >= 0 && before != s) c.migration += cfg.migration_cost;
            }
        }
    }
    c.total = c.energy + c.bandwidth + c.migration + c.sla_risk;
    return c;
}

// Every provider-hour on an overloaded server, plus every unassigned one.
inline std::vector<std::vector<char>> violations(const AllocationPlan& plan, const DemandMatrix& actual,
                                                 const std::vector<ServerSpec>& fleet) {
    std::vector<std::vector<char>> v(plan.hours, std::vector<char>(plan.providers(), 0));
    for (std::size_t t = 0; t < plan.hours; ++t)
        for (std::size_t s = 0; s < fleet.size(); ++s) {
            double total = 0;
            for (std::size_t p = 0; p < plan.providers(); ++p)
                if (plan.assignment[t][p] == int(s)) total += actual.at(t, p);
            for (std::size_t p = 0; p < plan.providers(); ++p)
                if (plan.assignment[t][p] == int(s) && total > fleet[s].bandwidth_capacity) v[t][p] = 1;
        }
    for (std::size_t t = 0; t < plan.hours; ++t)
        for (std::size_t p = 0; p < plan.providers(); ++p)
            if (plan.assignment[t][p] < 0) v[t][p] = 1;
    return v;
}

// Seeded random instance inside the brute-force bound (P<=4, S<=3, T<=3).
struct SmallInstance {
    DemandMatrix demand;
    std::vector<ServerSpec> fleet;
    CostConfig cost;
    std::vector<ContainerFlavor> catalog;
};

inline SmallInstance random_instance(Rng& rng) {
    SmallInstance in;
    const std::size_t P = 1 + rng.index(4), S = 1 + rng.index(3), T = 1 + rng.index(3);
    for (std::size_t s = 0; s < S; ++s)
        in.fleet.push_back({"s" + std::to_string(s), rng.uniform(50, 150), 8, 32, 100, rng.uniform(1, 10)});
    std::vector<std::string> ids;
    for (std::size_t p = 0; p < P; ++p) ids.push_back("p" + std::to_string(p));
    in.demand = DemandMatrix(ids, T);
    for (auto& v : in.demand.values) v = rng.uniform(0, 80);
    in.cost.migration_cost = rng.uniform(0, 5);
    in.cost.sla_penalty = rng.uniform(20, 100);
    in.cost.bandwidth_cost_per_mbps_hour = rng.uniform(0, 0.05);
    in.cost.headroom = rng.uniform(1, 1.3);
    in.catalog = {{"f", 1, 2, 10, 40, 1.0}};
    return in;
}

inline std::size_t unassigned(const AllocationPlan& plan) {
    std::size_t n = 0;
    for (const auto& row : plan.assignment) n += static_cast<std::size_t>(std::count(row.begin(), row.end(), kUnassigned));
    return n;
}

}  // namespace oracle
