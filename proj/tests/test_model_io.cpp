#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace edgecast;

namespace {

ForecastModel trained_model() {
    SynthConfig sc;
    sc.provider_count = 1;
    sc.days = 5;
    sc.seed = 21;
    TrainConfig cfg;
    cfg.hidden_size = 5;
    cfg.window_length = 12;
    cfg.epochs = 3;
    return train(generate_synthetic_traces(sc).front(), cfg);
}

}  // namespace

TEST(ModelFile, RoundTripIsExact) {
    const auto m = trained_model();
    const auto bytes = save_model(m);
    const auto back = load_model(bytes);
    EXPECT_EQ(back, m);
    EXPECT_EQ(save_model(back), bytes);
    EXPECT_EQ(back.training_loss_history.size(), 3u);
}

TEST(ModelFile, RandomParametersSurvive) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        ForecastModel m;
        m.provider_id = "p" + std::to_string(trial);
        m.config.hidden_size = 1 + rng.index(9);
        m.config.window_length = 1 + rng.index(30);
        m.config.seed = rng.next_u64();
        m.params = oracle::random_params(m.config.hidden_size, rng, 1e3 * rng.uniform01());
        m.norm = {rng.uniform(0, 10), rng.uniform(10, 1e6)};
        for (int e = 0; e < 5; ++e) m.training_loss_history.push_back(rng.uniform01() * 1e-7);
        const auto bytes = save_model(m);
        EXPECT_EQ(load_model(bytes), m);
        EXPECT_EQ(save_model(load_model(bytes)), bytes);
    }
}

TEST(ModelFile, CorruptionIsReported) {
    const auto bytes = save_model(trained_model());
    EXPECT_THROW(load_model(bytes.substr(0, bytes.size() / 2)), ModelFormatError);
    EXPECT_THROW(load_model(""), ModelFormatError);
    EXPECT_THROW(load_model("{\"format_version\": 1}"), ModelFormatError);

    auto wrong_shape = bytes;
    const auto pos = wrong_shape.rfind("\"hidden_size\": 5");
    ASSERT_NE(pos, std::string::npos);
    wrong_shape.replace(pos, 16, "\"hidden_size\": 6");
    EXPECT_THROW(load_model(wrong_shape), ModelFormatError);
}

TEST(ModelFile, FutureVersionRejected) {
    auto bytes = save_model(trained_model());
    const auto pos = bytes.find("\"format_version\": 1");
    ASSERT_NE(pos, std::string::npos);
    bytes.replace(pos, 19, "\"format_version\": 2");
    EXPECT_THROW(load_model(bytes), ModelVersionError);
}
