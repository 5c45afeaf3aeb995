#pragma once

// Outlier filtering, min-max scaling, windowing into supervised pairs and the
// chronological train/test split.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgecast/common.hpp"
#include "edgecast/trace.hpp"

namespace edgecast {

struct NormalizationParams {
    double min_value = 0.0;
    double max_value = 1.0;

    bool operator==(const NormalizationParams&) const = default;
};

/// Sliding windows over a normalized sequence. Window i covers source
/// positions [origin + i, origin + i + L) and its target is origin + i + L.
struct SupervisedDataset {
    std::size_t window_length = 0;
    std::size_t origin = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;

    std::size_t size() const noexcept { return targets.size(); }
    bool empty() const noexcept { return targets.empty(); }
};

inline constexpr double kMadScale = 1.4826;

namespace detail {

inline double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace detail

inline double median(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("median of empty range");
    std::vector<double> tmp(values.begin(), values.end());
    return detail::median_inplace(tmp);
}

/// Hampel filter. Windows are centred and truncated at the edges; statistics
/// are always taken over the unfiltered input. When MAD is 0 any point that
/// differs from the window median is replaced.
inline TraceSeries filter_outliers(const TraceSeries& series, std::size_t window = 7, double k = 3.0) {
    if (window < 3 || window % 2 == 0) throw InvalidArgument("hampel window must be odd and >= 3");
    if (!(k > 0)) throw InvalidArgument("hampel k must be > 0");
    if (series.size() < window)
        throw InvalidArgument("trace '" + series.provider_id + "' shorter than hampel window (" +
                              std::to_string(series.size()) + " < " + std::to_string(window) + ")");
    const std::size_t half = window / 2;
    const auto& x = series.samples;
    TraceSeries out = series;
    std::vector<double> buf;
    buf.reserve(window);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(x.size(), i + half + 1);
        buf.assign(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
        const double m = detail::median_inplace(buf);
        for (std::size_t j = lo; j < hi; ++j) buf[j - lo] = std::abs(x[j] - m);
        const double mad = detail::median_inplace(buf);
        if (std::abs(x[i] - m) > k * kMadScale * mad) out.samples[i] = m;
    }
    return out;
}

inline NormalizationParams fit_normalizer(std::span<const double> samples) {
    if (samples.empty()) throw InvalidArgument("cannot fit normalizer on an empty series");
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    return {*lo, *hi};
}

inline NormalizationParams fit_normalizer(const TraceSeries& series) { return fit_normalizer(series.samples); }

inline double normalize_value(double x, const NormalizationParams& p) {
    const double range = p.max_value - p.min_value;
    if (range == 0.0) return 0.5;
    return (x - p.min_value) / range;
}

inline double denormalize_value(double y, const NormalizationParams& p) {
    return y * (p.max_value - p.min_value) + p.min_value;
}

/// Constant-range params map everything to 0.5.
inline std::vector<double> normalize(std::span<const double> x, const NormalizationParams& p) {
    std::vector<double> y(x.size());
    std::transform(x.begin(), x.end(), y.begin(), [&](double v) { return normalize_value(v, p); });
    return y;
}

inline std::vector<double> denormalize(std::span<const double> y, const NormalizationParams& p) {
    std::vector<double> x(y.size());
    std::transform(y.begin(), y.end(), x.begin(), [&](double v) { return denormalize_value(v, p); });
    return x;
}

inline SupervisedDataset make_windows(std::span<const double> sequence, std::size_t L) {
    if (L < 1) throw InvalidArgument("window length must be >= 1");
    if (sequence.size() <= L)
        throw InvalidArgument("sequence length " + std::to_string(sequence.size()) +
                              " must exceed window length " + std::to_string(L));
    SupervisedDataset ds;
    ds.window_length = L;
    const std::size_t n = sequence.size() - L;
    ds.inputs.reserve(n);
    ds.targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.inputs.emplace_back(sequence.begin() + static_cast<std::ptrdiff_t>(i),
                               sequence.begin() + static_cast<std::ptrdiff_t>(i + L));
        ds.targets.push_back(sequence[i + L]);
    }
    return ds;
}

/// Chronological split: the first floor(fraction * N) pairs train, the rest test.
inline std::pair<SupervisedDataset, SupervisedDataset> split_train_test(const SupervisedDataset& ds,
                                                                        double train_fraction = 0.8) {
    if (!(train_fraction > 0 && train_fraction < 1)) throw InvalidArgument("train_fraction must be in (0,1)");
    if (ds.empty()) throw InvalidArgument("cannot split an empty dataset");
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ds.size())));
    if (n_train == 0 || n_train == ds.size())
        throw InvalidArgument("split of " + std::to_string(ds.size()) + " pairs leaves an empty side");
    SupervisedDataset train, test;
    train.window_length = test.window_length = ds.window_length;
    train.origin = ds.origin;
    test.origin = ds.origin + n_train;
    const auto cut = static_cast<std::ptrdiff_t>(n_train);
    train.inputs.assign(ds.inputs.begin(), ds.inputs.begin() + cut);
    train.targets.assign(ds.targets.begin(), ds.targets.begin() + cut);
    test.inputs.assign(ds.inputs.begin() + cut, ds.inputs.end());
    test.targets.assign(ds.targets.begin() + cut, ds.targets.end());
    return {std::move(train), std::move(test)};
}

}  // namespace edgecast
