#pragma once

// Versioned JSON model file. Doubles are written in shortest round-trip form,
// so load(save(m)) == m exactly.

#include <string>
#include <string_view>

#include <json.hpp>

#include "edgecast/lstm.hpp"

namespace edgecast {

inline constexpr int kModelFormatVersion = 1;

class ModelFormatError : public Error {
public:
    using Error::Error;
};

class ModelVersionError : public ModelFormatError {
public:
    using ModelFormatError::ModelFormatError;
};

namespace detail {

inline nlohmann::ordered_json config_to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["window_length"] = c.window_length;
    j["hidden_size"] = c.hidden_size;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_epsilon"] = c.adam_epsilon;
    j["huber_delta"] = c.huber_delta;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["gradient_clip_norm"] = c.gradient_clip_norm;
    j["train_fraction"] = c.train_fraction;
    j["hampel_window"] = c.hampel_window;
    j["hampel_k"] = c.hampel_k;
    j["early_stop"] = c.early_stop;
    j["early_stop_patience"] = c.early_stop_patience;
    j["early_stop_tolerance"] = c.early_stop_tolerance;
    return j;
}

inline TrainConfig config_from_json(const nlohmann::ordered_json& j) {
    TrainConfig c;
    c.window_length = j.at("window_length").get<std::size_t>();
    c.hidden_size = j.at("hidden_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_epsilon = j.at("adam_epsilon").get<double>();
    c.huber_delta = j.at("huber_delta").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.gradient_clip_norm = j.at("gradient_clip_norm").get<double>();
    c.train_fraction = j.at("train_fraction").get<double>();
    c.hampel_window = j.at("hampel_window").get<std::size_t>();
    c.hampel_k = j.at("hampel_k").get<double>();
    c.early_stop = j.at("early_stop").get<bool>();
    c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
    c.early_stop_tolerance = j.at("early_stop_tolerance").get<double>();
    return c;
}

inline nlohmann::ordered_json matrix_json(std::size_t rows, std::size_t cols, const std::vector<double>& data) {
    nlohmann::ordered_json j;
    j["rows"] = rows;
    j["cols"] = cols;
    j["data"] = data;
    return j;
}

inline std::vector<double> matrix_from_json(const nlohmann::ordered_json& j, std::size_t rows, std::size_t cols) {
    if (j.at("rows").get<std::size_t>() != rows || j.at("cols").get<std::size_t>() != cols)
        throw ModelFormatError("matrix dimensions do not match hidden size");
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) throw ModelFormatError("matrix payload has wrong element count");
    return data;
}

}  // namespace detail

inline std::string save_model(const ForecastModel& m) {
    const std::size_t H = m.params.hidden;
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    j["provider_id"] = m.provider_id;
    j["config"] = detail::config_to_json(m.config);
    j["normalization"] = {{"min_value", m.norm.min_value}, {"max_value", m.norm.max_value}};
    nlohmann::ordered_json params;
    params["input_size"] = 1;
    params["hidden_size"] = H;
    for (std::size_t k = 0; k < kGateCount; ++k) {
        params["gates"][kGateNames[k]] = {{"weights", detail::matrix_json(H, 1 + H, m.params.weights[k])},
                                          {"bias", detail::matrix_json(H, 1, m.params.biases[k])}};
    }
    params["head_weights"] = detail::matrix_json(1, H, m.params.head_weights);
    params["head_bias"] = m.params.head_bias;
    j["parameters"] = std::move(params);
    j["training_loss_history"] = m.training_loss_history;
    return j.dump(1) + "\n";
}

inline ForecastModel load_model(std::string_view bytes) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("corrupted model file: ") + e.what());
    }
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw ModelVersionError("unsupported model format_version " + std::to_string(version) + " (expected " +
                                    std::to_string(kModelFormatVersion) + ")");
        ForecastModel m;
        m.provider_id = j.at("provider_id").get<std::string>();
        m.config = detail::config_from_json(j.at("config"));
        m.norm.min_value = j.at("normalization").at("min_value").get<double>();
        m.norm.max_value = j.at("normalization").at("max_value").get<double>();
        const auto& p = j.at("parameters");
        if (p.at("input_size").get<int>() != 1) throw ModelFormatError("input_size must be 1");
        const std::size_t H = p.at("hidden_size").get<std::size_t>();
        if (H < 1) throw ModelFormatError("hidden_size must be >= 1");
        m.params = LstmParams::zeros(H);
        for (std::size_t k = 0; k < kGateCount; ++k) {
            const auto& g = p.at("gates").at(kGateNames[k]);
            m.params.weights[k] = detail::matrix_from_json(g.at("weights"), H, 1 + H);
            m.params.biases[k] = detail::matrix_from_json(g.at("bias"), H, 1);
        }
        m.params.head_weights = detail::matrix_from_json(p.at("head_weights"), 1, H);
        m.params.head_bias = p.at("head_bias").get<double>();
        m.training_loss_history = j.at("training_loss_history").get<std::vector<double>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("corrupted model file: ") + e.what());
    }
}

}  // namespace edgecast
