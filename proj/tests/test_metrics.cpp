#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace edgecast;

namespace {

SupervisedDataset constant_targets(std::size_t n, std::size_t L, double value) {
    SupervisedDataset ds;
    ds.window_length = L;
    for (std::size_t i = 0; i < n; ++i) {
        ds.inputs.emplace_back(L, 0.3);
        ds.targets.push_back(value);
    }
    return ds;
}

}  // namespace

TEST(Metrics, PerfectPredictionIsZero) {
    const std::vector<double> y{0.1, 0.5, 0.9};
    EXPECT_EQ(mse(y, y), 0.0);
    EXPECT_EQ(rmse(y, y), 0.0);
    EXPECT_EQ(mae(y, y), 0.0);
}

TEST(Metrics, SmallResidualExample) {
    const std::vector<double> y{0, 0, 0}, yhat{0.01, 0.02, 0.03};
    EXPECT_NEAR(mse(y, yhat), 0.0014 / 3, 1e-15);
    EXPECT_NEAR(mse(y, yhat), 0.00046667, 1e-8);
    EXPECT_NEAR(mae(y, yhat), 0.02, 1e-15);
    EXPECT_NEAR(rmse(y, yhat), std::sqrt(0.0014 / 3), 1e-15);
}

TEST(Metrics, RmseIsRootOfMse) {
    // A reported pair of mse 0.000233 and rmse 0.015278 is inconsistent; the
    // square root is 0.0152643.
    EXPECT_NEAR(std::sqrt(0.000233), 0.0152643, 1e-7);
    EXPECT_GT(std::abs(std::sqrt(0.000233) - 0.015278), 1e-5);
}

TEST(Metrics, MismatchedOrEmptyInputs) {
    const std::vector<double> a{1, 2}, b{1};
    EXPECT_THROW(mse(a, b), InvalidArgument);
    EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST(Metrics, MatchResidualLoopOnRandomVectors) {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(100);
        std::vector<double> y(n), yhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform01();
            yhat[i] = rng.uniform01();
        }
        double sq = 0, ab = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = yhat[i] - y[i];
            sq += r * r;
            ab += std::abs(r);
        }
        const double m = mse(y, yhat), r = rmse(y, yhat), a = mae(y, yhat);
        EXPECT_NEAR(m, sq / n, 1e-14);
        EXPECT_NEAR(a, ab / n, 1e-14);
        EXPECT_NEAR(r * r, m, 1e-12);
        EXPECT_LE(a, r + 1e-12);
        EXPECT_GE(m, 0.0);

        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        std::vector<double> py(n), pyhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            py[i] = y[perm[i]];
            pyhat[i] = yhat[perm[i]];
        }
        EXPECT_NEAR(mse(py, pyhat), m, 1e-14);
        EXPECT_NEAR(mae(py, pyhat), a, 1e-14);
    }
}

TEST(Evaluate, ConstantModelAgainstConstantTargets) {
    ForecastModel m;
    m.provider_id = "c";
    m.config.window_length = 4;
    m.config.hidden_size = 2;
    m.params = LstmParams::zeros(2);
    m.params.head_bias = 0.1;
    m.norm = {0, 100};
    const auto r = evaluate(m, constant_targets(10, 4, 0.0));
    EXPECT_EQ(r.n_test, 10u);
    EXPECT_NEAR(r.mse, 0.01, 1e-15);
    EXPECT_NEAR(r.mae, 0.1, 1e-15);
    EXPECT_NEAR(r.mae_mbps, 10, 1e-12);
    EXPECT_EQ(r.method, "lstm");

    m.params.head_bias = 0.5;
    const auto z = evaluate(m, constant_targets(7, 4, 0.5));
    EXPECT_EQ(z.mse, 0.0);
    EXPECT_THROW(evaluate(m, constant_targets(3, 5, 0.5)), InvalidArgument);
    EXPECT_THROW(evaluate(m, constant_targets(0, 4, 0.5)), InvalidArgument);
}

TEST(Evaluate, MatchesPredictionLoop) {
    SynthConfig sc;
    sc.provider_count = 1;
    sc.days = 6;
    TrainConfig cfg;
    cfg.hidden_size = 4;
    cfg.window_length = 12;
    cfg.epochs = 2;
    const auto s = generate_synthetic_traces(sc).front();
    const auto m = train(s, cfg);
    const auto data = prepare_data(s, cfg, m.norm);
    const auto r = evaluate(m, data.test);
    double sq = 0;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        const double e = oracle::forward(m.params, data.test.inputs[i]) - data.test.targets[i];
        sq += e * e;
        EXPECT_NEAR(r.residuals[i], e, 1e-12);
    }
    EXPECT_NEAR(r.mse, sq / data.test.size(), 1e-12);
}

TEST(Persistence, ConstantIsPerfectAndRampIsOneStep) {
    const auto flat = make_windows(std::vector<double>(30, 0.4), 5);
    EXPECT_EQ(persistence_baseline(flat).mse, 0.0);
    std::vector<double> ramp(30);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.02 * static_cast<double>(i);
    const auto r = persistence_baseline(make_windows(ramp, 5), "r");
    EXPECT_NEAR(r.mae, 0.02, 1e-12);
    EXPECT_NEAR(r.mse, 0.0004, 1e-12);
    EXPECT_EQ(r.method, "persistence");
}

TEST(EvalCsv, HeadersAndRows) {
    const std::vector<double> y{0, 0}, yhat{0.1, 0.3};
    const auto r = make_report("p7", "lstm", y, yhat, {0, 1});
    const auto eval = emit_eval_csv({r});
    std::istringstream in(eval);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, kEvalHeader);
    EXPECT_EQ(row, "p7,2," + format_double(r.mse) + "," + format_double(r.rmse) + "," + format_double(r.mae) + ",lstm");
    const auto res = emit_residual_csv({r});
    EXPECT_EQ(res.substr(0, res.find('\n')), kResidualHeader);
    EXPECT_NE(res.find("p7,lstm,1,0,0.3,0.3\n"), std::string::npos) << res;
    EXPECT_EQ(emit_eval_csv({}), std::string(kEvalHeader) + "\n");
}
