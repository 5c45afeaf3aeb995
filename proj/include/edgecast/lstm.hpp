#pragma once

// Single-layer LSTM regressor with a ReLU dense head, trained with Huber loss
// and Adam. Scalar input, scalar output; everything runs in normalized units.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgecast/common.hpp"
#include "edgecast/preprocess.hpp"
#include "edgecast/trace.hpp"

namespace edgecast {

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };
inline constexpr std::size_t kGateCount = 4;
inline constexpr std::array<const char*, kGateCount> kGateNames = {"input", "forget", "output", "candidate"};

// Initial head bias: the middle of the normalized range, so the ReLU head
// starts in its active region.
inline constexpr double kHeadBiasInit = 0.5;

/// Gate weights are H x (1 + H) row-major: column 0 multiplies the input,
/// columns 1..H the previous hidden state.
struct LstmParams {
    std::size_t hidden = 0;
    std::array<std::vector<double>, kGateCount> weights;
    std::array<std::vector<double>, kGateCount> biases;
    std::vector<double> head_weights;
    double head_bias = 0.0;

    static LstmParams zeros(std::size_t hidden) {
        LstmParams p;
        p.hidden = hidden;
        for (std::size_t k = 0; k < kGateCount; ++k) {
            p.weights[k].assign(hidden * (1 + hidden), 0.0);
            p.biases[k].assign(hidden, 0.0);
        }
        p.head_weights.assign(hidden, 0.0);
        return p;
    }

    std::size_t row_stride() const noexcept { return 1 + hidden; }
    std::size_t parameter_count() const noexcept { return kGateCount * hidden * (2 + hidden) + hidden + 1; }

    /// Calls fn(span) for every parameter block in a fixed order.
    template <typename Fn>
    void visit(Fn&& fn) {
        for (auto& w : weights) fn(std::span<double>(w));
        for (auto& b : biases) fn(std::span<double>(b));
        fn(std::span<double>(head_weights));
        fn(std::span<double>(&head_bias, 1));
    }
    template <typename Fn>
    void visit(Fn&& fn) const {
        for (const auto& w : weights) fn(std::span<const double>(w));
        for (const auto& b : biases) fn(std::span<const double>(b));
        fn(std::span<const double>(head_weights));
        fn(std::span<const double>(&head_bias, 1));
    }

    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(parameter_count());
        visit([&](std::span<const double> s) { out.insert(out.end(), s.begin(), s.end()); });
        return out;
    }

    void assign_flat(std::span<const double> flat) {
        if (flat.size() != parameter_count()) throw InvalidArgument("flat parameter size mismatch");
        std::size_t pos = 0;
        visit([&](std::span<double> s) {
            for (auto& v : s) v = flat[pos++];
        });
    }

    bool operator==(const LstmParams&) const = default;
};

inline void check_shape(const LstmParams& p) {
    const std::size_t h = p.hidden;
    bool ok = h >= 1 && p.head_weights.size() == h;
    for (std::size_t k = 0; k < kGateCount && ok; ++k)
        ok = p.weights[k].size() == h * (1 + h) && p.biases[k].size() == h;
    if (!ok) throw InvalidArgument("LSTM parameter dimensions inconsistent with hidden size");
}

struct TrainConfig {
    std::size_t window_length = 24;
    std::size_t hidden_size = 32;
    std::size_t epochs = 50;
    double learning_rate = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double huber_delta = 1.0;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double gradient_clip_norm = 5.0;

    double train_fraction = 0.8;
    std::size_t hampel_window = 7;
    double hampel_k = 3.0;
    // Optional plateau stop: relative train-loss improvement below
    // early_stop_tolerance across early_stop_patience epochs.
    bool early_stop = false;
    std::size_t early_stop_patience = 5;
    double early_stop_tolerance = 1e-4;

    bool operator==(const TrainConfig&) const = default;
};

inline void validate(const TrainConfig& c) {
    if (c.window_length < 1 || c.hidden_size < 1 || c.epochs < 1 || c.batch_size < 1)
        throw InvalidArgument("window_length, hidden_size, epochs and batch_size must be >= 1");
    if (!(c.learning_rate > 0 && c.adam_epsilon > 0 && c.huber_delta > 0 && c.gradient_clip_norm > 0))
        throw InvalidArgument("learning_rate, adam_epsilon, huber_delta and gradient_clip_norm must be > 0");
    if (!(c.adam_beta1 > 0 && c.adam_beta1 < 1 && c.adam_beta2 > 0 && c.adam_beta2 < 1))
        throw InvalidArgument("adam betas must lie in (0,1)");
    if (!(c.train_fraction > 0 && c.train_fraction < 1)) throw InvalidArgument("train_fraction must be in (0,1)");
}

struct ForecastModel {
    std::string provider_id;
    LstmParams params;
    NormalizationParams norm;
    TrainConfig config;
    std::vector<double> training_loss_history;

    bool operator==(const ForecastModel&) const = default;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline LstmParams init_params(std::size_t hidden, std::uint64_t seed) {
    if (hidden < 1) throw InvalidArgument("hidden size must be >= 1");
    Rng rng(seed);
    auto p = LstmParams::zeros(hidden);
    const double bound = 1.0 / std::sqrt(1.0 + static_cast<double>(hidden));
    for (auto& w : p.weights)
        for (auto& v : w) v = rng.uniform(-bound, bound);
    for (auto& v : p.head_weights) v = rng.uniform(-bound, bound);
    p.biases[kForgetGate].assign(hidden, 1.0);
    p.head_bias = kHeadBiasInit;
    return p;
}

struct CellState {
    std::vector<double> h;
    std::vector<double> c;
};

/// Everything one time step needs for the backward pass.
struct StepCache {
    std::array<std::vector<double>, kGateCount> act;  // i, f, o, g after nonlinearity
    std::vector<double> c;
    std::vector<double> tanh_c;
    std::vector<double> h;
};

namespace detail {

inline void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw DivergenceError(std::string("non-finite value in ") + what);
}

inline StepCache step(const LstmParams& p, double x, std::span<const double> h_prev, std::span<const double> c_prev) {
    const std::size_t H = p.hidden;
    const std::size_t stride = p.row_stride();
    StepCache s;
    for (std::size_t k = 0; k < kGateCount; ++k) {
        auto& a = s.act[k];
        a.resize(H);
        const auto& W = p.weights[k];
        for (std::size_t r = 0; r < H; ++r) {
            const double* row = &W[r * stride];
            double z = p.biases[k][r] + row[0] * x;
            for (std::size_t j = 0; j < H; ++j) z += row[1 + j] * h_prev[j];
            a[r] = k == kCandidate ? std::tanh(z) : sigmoid(z);
        }
    }
    s.c.resize(H);
    s.tanh_c.resize(H);
    s.h.resize(H);
    for (std::size_t r = 0; r < H; ++r) {
        s.c[r] = s.act[kForgetGate][r] * c_prev[r] + s.act[kInputGate][r] * s.act[kCandidate][r];
        s.tanh_c[r] = std::tanh(s.c[r]);
        s.h[r] = s.act[kOutputGate][r] * s.tanh_c[r];
    }
    require_finite(s.c, "cell state");
    require_finite(s.h, "hidden state");
    return s;
}

inline double head_preactivation(const LstmParams& p, std::span<const double> h) {
    double z = p.head_bias;
    for (std::size_t r = 0; r < p.hidden; ++r) z += p.head_weights[r] * h[r];
    return z;
}

}  // namespace detail

inline CellState cell_forward(const LstmParams& p, double x, std::span<const double> h_prev,
                              std::span<const double> c_prev) {
    if (h_prev.size() != p.hidden || c_prev.size() != p.hidden)
        throw InvalidArgument("state dimension does not match hidden size");
    auto s = detail::step(p, x, h_prev, c_prev);
    return {std::move(s.h), std::move(s.c)};
}

/// Runs the window from a zero state and applies relu(w_out . h_L + b_out).
inline double forward_window(const LstmParams& p, std::span<const double> window) {
    std::vector<double> h(p.hidden, 0.0), c(p.hidden, 0.0);
    for (double x : window) {
        if (!std::isfinite(x)) throw InvalidArgument("non-finite value in input window");
        auto s = detail::step(p, x, h, c);
        h = std::move(s.h);
        c = std::move(s.c);
    }
    return std::max(0.0, detail::head_preactivation(p, h));
}

inline double forward_window(const ForecastModel& m, std::span<const double> window) {
    if (window.size() != m.config.window_length)
        throw InvalidArgument("window length " + std::to_string(window.size()) + " != model window length " +
                              std::to_string(m.config.window_length));
    return forward_window(m.params, window);
}

struct HuberResult {
    double loss;
    double derivative;  // d loss / d prediction
};

inline HuberResult huber_loss(double target, double prediction, double delta) {
    const double e = prediction - target;
    if (std::abs(e) <= delta) return {0.5 * e * e, e};
    return {delta * (std::abs(e) - 0.5 * delta), e > 0 ? delta : -delta};
}

struct WindowGradient {
    LstmParams grad;
    double loss = 0.0;
    double prediction = 0.0;
};

/// Exact gradient of huber(target, forward_window(window)) by backpropagation
/// through time. The ReLU subgradient at 0 is 0.
inline WindowGradient backward_window(const LstmParams& p, std::span<const double> window, double target,
                                      double delta) {
    const std::size_t H = p.hidden;
    const std::size_t L = window.size();
    const std::size_t stride = p.row_stride();
    if (L == 0) throw InvalidArgument("empty window");

    std::vector<StepCache> steps;
    steps.reserve(L);
    const std::vector<double> zero(H, 0.0);
    for (std::size_t t = 0; t < L; ++t) {
        const auto& h_prev = t == 0 ? zero : steps[t - 1].h;
        const auto& c_prev = t == 0 ? zero : steps[t - 1].c;
        steps.push_back(detail::step(p, window[t], h_prev, c_prev));
    }

    WindowGradient out;
    out.grad = LstmParams::zeros(H);
    auto& g = out.grad;
    const auto& h_last = steps.back().h;
    const double z = detail::head_preactivation(p, h_last);
    out.prediction = std::max(0.0, z);
    const auto hub = huber_loss(target, out.prediction, delta);
    out.loss = hub.loss;
    const double dz = z > 0.0 ? hub.derivative : 0.0;

    g.head_bias = dz;
    std::vector<double> dh(H), dc_next(H, 0.0), dh_prev(H);
    for (std::size_t r = 0; r < H; ++r) {
        g.head_weights[r] = dz * h_last[r];
        dh[r] = dz * p.head_weights[r];
    }

    std::array<std::vector<double>, kGateCount> da;
    for (auto& v : da) v.resize(H);
    for (std::size_t t = L; t-- > 0;) {
        const auto& s = steps[t];
        const auto& c_prev = t == 0 ? zero : steps[t - 1].c;
        const auto& h_prev = t == 0 ? zero : steps[t - 1].h;
        const auto& i = s.act[kInputGate];
        const auto& f = s.act[kForgetGate];
        const auto& o = s.act[kOutputGate];
        const auto& gg = s.act[kCandidate];
        for (std::size_t r = 0; r < H; ++r) {
            const double tc = s.tanh_c[r];
            const double d_o = dh[r] * tc;
            const double dc = dc_next[r] + dh[r] * o[r] * (1.0 - tc * tc);
            da[kInputGate][r] = dc * gg[r] * i[r] * (1.0 - i[r]);
            da[kForgetGate][r] = dc * c_prev[r] * f[r] * (1.0 - f[r]);
            da[kOutputGate][r] = d_o * o[r] * (1.0 - o[r]);
            da[kCandidate][r] = dc * i[r] * (1.0 - gg[r] * gg[r]);
            dc_next[r] = dc * f[r];
        }
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t k = 0; k < kGateCount; ++k) {
            const auto& W = p.weights[k];
            auto& dW = g.weights[k];
            for (std::size_t r = 0; r < H; ++r) {
                const double a = da[k][r];
                g.biases[k][r] += a;
                double* drow = &dW[r * stride];
                const double* row = &W[r * stride];
                drow[0] += a * window[t];
                for (std::size_t j = 0; j < H; ++j) {
                    drow[1 + j] += a * h_prev[j];
                    dh_prev[j] += row[1 + j] * a;
                }
            }
        }
        std::swap(dh, dh_prev);
    }

    bool finite = std::isfinite(out.loss);
    g.visit([&](std::span<const double> blk) {
        for (double v : blk) finite = finite && std::isfinite(v);
    });
    if (!finite) throw DivergenceError("non-finite gradient");
    return out;
}

inline void accumulate(LstmParams& into, const LstmParams& g) {
    for (std::size_t k = 0; k < kGateCount; ++k) {
        for (std::size_t j = 0; j < into.weights[k].size(); ++j) into.weights[k][j] += g.weights[k][j];
        for (std::size_t j = 0; j < into.biases[k].size(); ++j) into.biases[k][j] += g.biases[k][j];
    }
    for (std::size_t j = 0; j < into.head_weights.size(); ++j) into.head_weights[j] += g.head_weights[j];
    into.head_bias += g.head_bias;
}

/// First and second moment estimates, shaped like the parameters.
struct AdamState {
    LstmParams m;
    LstmParams v;

    static AdamState zeros(std::size_t hidden) { return {LstmParams::zeros(hidden), LstmParams::zeros(hidden)}; }
};

inline double global_norm(const LstmParams& g) {
    double sq = 0.0;
    g.visit([&](std::span<const double> blk) {
        for (double v : blk) sq += v * v;
    });
    return std::sqrt(sq);
}

/// One Adam update at step t (1-based). Gradients are rescaled first so their
/// global L2 norm does not exceed config.gradient_clip_norm.
inline void adam_step(LstmParams& params, const LstmParams& gradients, AdamState& state, std::size_t t,
                      const TrainConfig& cfg) {
    if (t < 1) throw InvalidArgument("adam step index must be >= 1");
    const double norm = global_norm(gradients);
    const double scale = norm > cfg.gradient_clip_norm ? cfg.gradient_clip_norm / norm : 1.0;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));

    std::vector<std::span<double>> P, M, V;
    std::vector<std::span<const double>> G;
    params.visit([&](std::span<double> s) { P.push_back(s); });
    state.m.visit([&](std::span<double> s) { M.push_back(s); });
    state.v.visit([&](std::span<double> s) { V.push_back(s); });
    gradients.visit([&](std::span<const double> s) { G.push_back(s); });
    if (P.size() != G.size()) throw InvalidArgument("gradient shape mismatch");
    for (std::size_t b = 0; b < P.size(); ++b) {
        if (P[b].size() != G[b].size() || P[b].size() != M[b].size() || P[b].size() != V[b].size())
            throw InvalidArgument("gradient shape mismatch");
        for (std::size_t j = 0; j < P[b].size(); ++j) {
            const double gj = G[b][j] * scale;
            M[b][j] = b1 * M[b][j] + (1.0 - b1) * gj;
            V[b][j] = b2 * V[b][j] + (1.0 - b2) * gj * gj;
            const double m_hat = M[b][j] / c1;
            const double v_hat = V[b][j] / c2;
            P[b][j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
    }
}

/// The normalized train/test pairs exactly as train() builds them.
struct PreparedData {
    TraceSeries cleaned;
    NormalizationParams norm;
    SupervisedDataset train;
    SupervisedDataset test;
};

inline PreparedData prepare_data(const TraceSeries& series, const TrainConfig& cfg,
                                 const std::optional<NormalizationParams>& norm = std::nullopt) {
    PreparedData d;
    if (series.size() <= cfg.window_length + 1)
        throw InvalidArgument("trace '" + series.provider_id + "' has " + std::to_string(series.size()) +
                              " samples, too short for window length " + std::to_string(cfg.window_length));
    d.cleaned = filter_outliers(series, cfg.hampel_window, cfg.hampel_k);
    d.norm = norm ? *norm : fit_normalizer(d.cleaned);
    const auto scaled = normalize(d.cleaned.samples, d.norm);
    auto windows = make_windows(scaled, cfg.window_length);
    auto [train, test] = split_train_test(windows, cfg.train_fraction);
    d.train = std::move(train);
    d.test = std::move(test);
    return d;
}

/// Full per-provider pipeline: filter, scale, window, split, then minibatch
/// Adam over the training pairs for config.epochs epochs.
inline ForecastModel train(const TraceSeries& series, const TrainConfig& cfg) {
    validate(cfg);
    auto data = prepare_data(series, cfg);

    ForecastModel model;
    model.provider_id = series.provider_id;
    model.config = cfg;
    model.norm = data.norm;
    Rng rng(cfg.seed);
    model.params = init_params(cfg.hidden_size, rng.next_u64());
    auto state = AdamState::zeros(cfg.hidden_size);

    const std::size_t n = data.train.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::size_t step_index = 0;
    auto grad_sum = LstmParams::zeros(cfg.hidden_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t end = std::min(n, begin + cfg.batch_size);
            grad_sum.visit([](std::span<double> s) { std::fill(s.begin(), s.end(), 0.0); });
            for (std::size_t b = begin; b < end; ++b) {
                const std::size_t idx = order[b];
                WindowGradient wg;
                try {
                    wg = backward_window(model.params, data.train.inputs[idx], data.train.targets[idx],
                                         cfg.huber_delta);
                } catch (const DivergenceError&) {
                    throw DivergenceError("training '" + series.provider_id + "' diverged at epoch " +
                                          std::to_string(epoch));
                }
                loss_sum += wg.loss;
                accumulate(grad_sum, wg.grad);
            }
            const double inv = 1.0 / static_cast<double>(end - begin);
            grad_sum.visit([&](std::span<double> s) {
                for (auto& v : s) v *= inv;
            });
            adam_step(model.params, grad_sum, state, ++step_index, cfg);
        }
        const double epoch_loss = loss_sum / static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw DivergenceError("training '" + series.provider_id + "' diverged at epoch " + std::to_string(epoch));
        model.training_loss_history.push_back(epoch_loss);

        const auto& hist = model.training_loss_history;
        if (cfg.early_stop && hist.size() > cfg.early_stop_patience) {
            const double before = hist[hist.size() - 1 - cfg.early_stop_patience];
            if (before > 0 && (before - hist.back()) / before < cfg.early_stop_tolerance) break;
        }
    }
    return model;
}

/// One-step forecast in Mbps from exactly L recent raw samples.
inline double predict_next(const ForecastModel& m, std::span<const double> recent) {
    if (recent.size() != m.config.window_length)
        throw InvalidArgument("expected " + std::to_string(m.config.window_length) + " recent samples, got " +
                              std::to_string(recent.size()));
    const auto window = normalize(recent, m.norm);
    return denormalize_value(forward_window(m.params, window), m.norm);
}

/// Iterated forecast: each normalized prediction is appended to the sliding
/// window that feeds the next step.
inline std::vector<double> predict_horizon(const ForecastModel& m, std::span<const double> recent,
                                           std::size_t horizon) {
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    if (recent.size() != m.config.window_length)
        throw InvalidArgument("expected " + std::to_string(m.config.window_length) + " recent samples, got " +
                              std::to_string(recent.size()));
    auto window = normalize(recent, m.norm);
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        const double y = forward_window(m.params, window);
        out.push_back(denormalize_value(y, m.norm));
        window.erase(window.begin());
        window.push_back(y);
    }
    return out;
}

}  // namespace edgecast
