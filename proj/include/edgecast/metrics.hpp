#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "edgecast/common.hpp"
#include "edgecast/lstm.hpp"
#include "edgecast/preprocess.hpp"

namespace edgecast {

namespace detail {

inline void check_pair(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.empty()) throw InvalidArgument("metrics need at least one value");
    if (actual.size() != predicted.size())
        throw InvalidArgument("length mismatch: " + std::to_string(actual.size()) + " actual vs " +
                              std::to_string(predicted.size()) + " predicted");
    for (std::size_t i = 0; i < actual.size(); ++i)
        if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i]))
            throw InvalidArgument("non-finite value at index " + std::to_string(i));
}

}  // namespace detail

inline double mse(std::span<const double> actual, std::span<const double> predicted) {
    detail::check_pair(actual, predicted);
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double r = predicted[i] - actual[i];
        s += r * r;
    }
    return s / static_cast<double>(actual.size());
}

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
    return std::sqrt(mse(actual, predicted));
}

inline double mae(std::span<const double> actual, std::span<const double> predicted) {
    detail::check_pair(actual, predicted);
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(predicted[i] - actual[i]);
    return s / static_cast<double>(actual.size());
}

/// Metrics are in normalized units; the *_mbps fields repeat them after
/// scaling residuals back to Mbps.
struct EvalReport {
    std::string provider_id;
    std::string method;
    std::size_t n_test = 0;
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double mse_mbps = 0.0;
    double rmse_mbps = 0.0;
    double mae_mbps = 0.0;
    std::vector<double> actual;
    std::vector<double> predicted;
    std::vector<double> residuals;  // predicted - actual
};

inline EvalReport make_report(std::string provider_id, std::string method, std::vector<double> actual,
                              std::vector<double> predicted, const NormalizationParams& norm) {
    EvalReport r;
    r.provider_id = std::move(provider_id);
    r.method = std::move(method);
    r.n_test = actual.size();
    r.mse = mse(actual, predicted);
    r.rmse = std::sqrt(r.mse);
    r.mae = mae(actual, predicted);
    const double range = norm.max_value - norm.min_value;
    r.mse_mbps = r.mse * range * range;
    r.rmse_mbps = r.rmse * range;
    r.mae_mbps = r.mae * range;
    r.residuals.resize(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) r.residuals[i] = predicted[i] - actual[i];
    r.actual = std::move(actual);
    r.predicted = std::move(predicted);
    return r;
}

inline EvalReport evaluate(const ForecastModel& model, const SupervisedDataset& test) {
    if (test.empty()) throw InvalidArgument("empty test set");
    if (test.window_length != model.config.window_length)
        throw InvalidArgument("dataset window length " + std::to_string(test.window_length) +
                              " != model window length " + std::to_string(model.config.window_length));
    std::vector<double> predicted;
    predicted.reserve(test.size());
    for (const auto& w : test.inputs) predicted.push_back(forward_window(model.params, w));
    return make_report(model.provider_id, "lstm", test.targets, std::move(predicted), model.norm);
}

/// Predicts every target as the last value of its input window.
inline EvalReport persistence_baseline(const SupervisedDataset& test, std::string provider_id = {},
                                       const NormalizationParams& norm = {}) {
    if (test.empty()) throw InvalidArgument("empty test set");
    std::vector<double> predicted;
    predicted.reserve(test.size());
    for (const auto& w : test.inputs) {
        if (w.empty()) throw InvalidArgument("empty input window");
        predicted.push_back(w.back());
    }
    return make_report(std::move(provider_id), "persistence", test.targets, std::move(predicted), norm);
}

inline constexpr std::string_view kEvalHeader = "provider_id,n_test,mse,rmse,mae,method";
inline constexpr std::string_view kResidualHeader = "provider_id,method,index,actual,predicted,residual";

inline std::string emit_eval_csv(const std::vector<EvalReport>& reports) {
    std::string out(kEvalHeader);
    out += '\n';
    for (const auto& r : reports) {
        out += r.provider_id + ',' + std::to_string(r.n_test) + ',' + format_double(r.mse) + ',' +
               format_double(r.rmse) + ',' + format_double(r.mae) + ',' + r.method + '\n';
    }
    return out;
}

inline std::string emit_residual_csv(const std::vector<EvalReport>& reports) {
    std::string out(kResidualHeader);
    out += '\n';
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.residuals.size(); ++i) {
            out += r.provider_id + ',' + r.method + ',' + std::to_string(i) + ',' + format_double(r.actual[i]) + ',' +
                   format_double(r.predicted[i]) + ',' + format_double(r.residuals[i]) + '\n';
        }
    }
    return out;
}

}  // namespace edgecast
