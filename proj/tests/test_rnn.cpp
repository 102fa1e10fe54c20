#include <gtest/gtest.h>

#include "segmentor/grad_check.hpp"
#include "segmentor/rnn_features.hpp"
#include "test_util.hpp"

using namespace seg;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform_sym(rng, scale);
    return v;
}

}  // namespace

TEST(LstmCell, ZeroParamsGiveHalfGatesAndZeroState) {
    const std::size_t H = 3, in = 4;
    std::vector<double> x{0.3, -0.7, 2.0, 0.1}, h0(H, 0.0), c0(H, 0.0);
    std::vector<double> Wx(4 * H * in, 0.0), Wh(4 * H * H, 0.0), b(4 * H, 0.0);
    LstmCellResult r = lstm_cell(x, h0, c0, Wx, Wh, b);
    for (std::size_t k = 0; k < H; ++k) {
        EXPECT_DOUBLE_EQ(r.gates[k], 0.5);           // i
        EXPECT_DOUBLE_EQ(r.gates[H + k], 0.5);       // f
        EXPECT_DOUBLE_EQ(r.gates[2 * H + k], 0.0);   // g
        EXPECT_DOUBLE_EQ(r.gates[3 * H + k], 0.5);   // o
        EXPECT_DOUBLE_EQ(r.c[k], 0.0);
        EXPECT_DOUBLE_EQ(r.h[k], 0.0);
    }
}

TEST(LstmCell, SaturatedForgetGateCarriesCellState) {
    const std::size_t H = 2, in = 2;
    std::vector<double> x{0.5, -0.5}, h0(H, 0.0), c0{1.25, -0.75};
    std::vector<double> Wx(4 * H * in, 0.0), Wh(4 * H * H, 0.0), b(4 * H, 0.0);
    b[H] = 20.0;
    b[H + 1] = 20.0;  // forget block
    // input gate at sigmoid(0) = 0.5 but g = tanh(0) = 0, so c = f * c_prev
    LstmCellResult r = lstm_cell(x, h0, c0, Wx, Wh, b);
    EXPECT_NEAR(r.c[0], c0[0], 1e-8);
    EXPECT_NEAR(r.c[1], c0[1], 1e-8);
}

// Independent straight-line evaluation of the five cell equations,
// scalar by scalar.
TEST(LstmCell, MatchesScalarReimplementation) {
    const std::size_t H = 2, in = 3;
    std::mt19937_64 rng(123);
    auto x = random_vec(rng, in), h0 = random_vec(rng, H), c0 = random_vec(rng, H);
    auto Wx = random_vec(rng, 4 * H * in), Wh = random_vec(rng, 4 * H * H), b = random_vec(rng, 4 * H);

    LstmCellResult r = lstm_cell(x, h0, c0, Wx, Wh, b);

    for (std::size_t k = 0; k < H; ++k) {
        auto pre = [&](std::size_t row) {
            double a = b[row];
            for (std::size_t j = 0; j < in; ++j) a += Wx[row * in + j] * x[j];
            for (std::size_t j = 0; j < H; ++j) a += Wh[row * H + j] * h0[j];
            return a;
        };
        double i = 1.0 / (1.0 + std::exp(-pre(k)));
        double f = 1.0 / (1.0 + std::exp(-pre(H + k)));
        double g = std::tanh(pre(2 * H + k));
        double o = 1.0 / (1.0 + std::exp(-pre(3 * H + k)));
        double c = f * c0[k] + i * g;
        double h = o * std::tanh(c);
        EXPECT_NEAR(r.c[k], c, 1e-14);
        EXPECT_NEAR(r.h[k], h, 1e-14);
    }
}

TEST(LstmCell, NonFiniteInputThrows) {
    const std::size_t H = 1, in = 1;
    std::vector<double> x{std::numeric_limits<double>::quiet_NaN()}, h0(H, 0.0), c0(H, 0.0);
    std::vector<double> Wx(4, 0.0), Wh(4, 0.0), b(4, 0.0);
    EXPECT_THROW(lstm_cell(x, h0, c0, Wx, Wh, b), NumericError);
}

TEST(BilstmForward, ForwardOnlyHasHColumns) {
    RnnConfig cfg{1, 5, false, 0.0};
    std::mt19937_64 rng(9);
    Matrix input = segtest::random_matrix(rng, 6, 3);
    ParamStore params = init_params(rnn_param_specs(3, cfg), 4);
    RnnCache cache;
    Matrix phi = bilstm_forward(input, params, cfg, false, 0, cache);
    EXPECT_EQ(phi.rows(), 6u);
    EXPECT_EQ(phi.cols(), 5u);
}

TEST(BilstmForward, EvalModeIgnoresDropout) {
    RnnConfig with_drop{2, 4, true, 0.5};
    RnnConfig no_drop{2, 4, true, 0.0};
    std::mt19937_64 rng(10);
    Matrix input = segtest::random_matrix(rng, 7, 3);
    ParamStore params = init_params(rnn_param_specs(3, with_drop), 5);
    RnnCache c1, c2;
    Matrix a = bilstm_forward(input, params, with_drop, false, 999, c1);
    Matrix b = bilstm_forward(input, params, no_drop, false, 0, c2);
    EXPECT_TRUE(a == b);
}

// Dropout sits between layers only, so a single-layer net never drops.
TEST(BilstmForward, NoDropoutAfterTheLastLayer) {
    RnnConfig cfg{1, 4, true, 0.9};
    std::mt19937_64 rng(20);
    Matrix input = segtest::random_matrix(rng, 5, 3);
    ParamStore params = init_params(rnn_param_specs(3, cfg), 21);
    RnnCache c1, c2;
    Matrix train_out = bilstm_forward(input, params, cfg, true, 12345, c1);
    Matrix eval_out = bilstm_forward(input, params, cfg, false, 0, c2);
    EXPECT_TRUE(train_out == eval_out);
}

TEST(BilstmForward, TrainModeDropoutIsSeedDeterministic) {
    RnnConfig cfg{2, 4, true, 0.4};
    std::mt19937_64 rng(11);
    Matrix input = segtest::random_matrix(rng, 5, 3);
    ParamStore params = init_params(rnn_param_specs(3, cfg), 6);
    RnnCache c1, c2, c3;
    Matrix a = bilstm_forward(input, params, cfg, true, 42, c1);
    Matrix b = bilstm_forward(input, params, cfg, true, 42, c2);
    Matrix c = bilstm_forward(input, params, cfg, true, 43, c3);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == c);
}

// With the two directions' weights tied, reversing the input must exactly
// reverse the output rows and swap the forward/backward halves.
TEST(BilstmForward, ReversedInputReversesRowsAndSwapsHalves) {
    RnnConfig cfg{1, 4, true, 0.0};
    std::mt19937_64 rng(12);
    Matrix input = segtest::random_matrix(rng, 6, 3);
    ParamStore params = init_params(rnn_param_specs(3, cfg), 7);
    for (const char* leaf : {"Wx", "Wh", "b"})
        params.values(rnn_group_name(0, true, leaf)) = params.values(rnn_group_name(0, false, leaf));
    RnnCache c1, c2;
    Matrix phi = bilstm_forward(input, params, cfg, false, 0, c1);
    Matrix phi_rev = bilstm_forward(reverse_rows(input), params, cfg, false, 0, c2);
    const std::size_t T = 6, H = 4;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < H; ++k) {
            EXPECT_DOUBLE_EQ(phi_rev(t, k), phi(T - 1 - t, H + k));
            EXPECT_DOUBLE_EQ(phi_rev(t, H + k), phi(T - 1 - t, k));
        }
}

TEST(BilstmForward, MismatchedParamsThrow) {
    RnnConfig cfg{1, 4, true, 0.0};
    ParamStore params = init_params(rnn_param_specs(3, cfg), 7);
    Matrix input(5, 2);  // wrong input dim
    RnnCache cache;
    EXPECT_THROW(bilstm_forward(input, params, cfg, false, 0, cache), DataError);
}

TEST(BilstmBackward, ZeroUpstreamGivesZeroGradients) {
    RnnConfig cfg{2, 3, true, 0.0};
    std::mt19937_64 rng(13);
    Matrix input = segtest::random_matrix(rng, 5, 2);
    ParamStore params = init_params(rnn_param_specs(2, cfg), 8);
    RnnCache cache;
    Matrix phi = bilstm_forward(input, params, cfg, false, 0, cache);
    GradientBundle g = bilstm_backward(Matrix(phi.rows(), phi.cols()), cache, params);
    for (const auto& grp : g.groups())
        for (double v : grp.values) EXPECT_EQ(v, 0.0);
}

TEST(BilstmBackward, AdditiveOverUpstreamRows) {
    RnnConfig cfg{1, 3, true, 0.0};
    std::mt19937_64 rng(14);
    Matrix input = segtest::random_matrix(rng, 6, 2);
    ParamStore params = init_params(rnn_param_specs(2, cfg), 9);
    RnnCache cache;
    Matrix phi = bilstm_forward(input, params, cfg, false, 0, cache);

    Matrix dA(phi.rows(), phi.cols()), dB(phi.rows(), phi.cols()), dAB(phi.rows(), phi.cols());
    for (std::size_t i = 0; i < dA.data().size(); ++i) {
        dA.data()[i] = uniform_sym(rng, 1.0);
        dB.data()[i] = uniform_sym(rng, 1.0);
        dAB.data()[i] = dA.data()[i] + dB.data()[i];
    }
    GradientBundle ga = bilstm_backward(dA, cache, params);
    GradientBundle gb = bilstm_backward(dB, cache, params);
    GradientBundle gab = bilstm_backward(dAB, cache, params);
    for (std::size_t gi = 0; gi < ga.groups().size(); ++gi)
        for (std::size_t i = 0; i < ga.groups()[gi].values.size(); ++i)
            EXPECT_NEAR(gab.groups()[gi].values[i],
                        ga.groups()[gi].values[i] + gb.groups()[gi].values[i], 1e-12);
}

namespace {

// max relative gradient error for loss(params) = sum(dPhi . phi(params))
double phi_projection_grad_error(const RnnConfig& cfg, std::size_t T, std::size_t D,
                                 std::uint64_t seed, bool train_mode, std::uint64_t drop_seed) {
    std::mt19937_64 rng(seed);
    Matrix input = segtest::random_matrix(rng, T, D);
    ParamStore params = init_params(rnn_param_specs(D, cfg), seed + 1);
    Matrix dPhi = segtest::random_matrix(rng, T, feature_dim(cfg));

    auto loss_fn = [&](const ParamStore& p) {
        RnnCache cache;
        Matrix phi = bilstm_forward(input, p, cfg, train_mode, drop_seed, cache);
        double s = 0.0;
        for (std::size_t i = 0; i < phi.data().size(); ++i) s += dPhi.data()[i] * phi.data()[i];
        return s;
    };
    auto grad_fn = [&](const ParamStore& p) {
        RnnCache cache;
        bilstm_forward(input, p, cfg, train_mode, drop_seed, cache);
        return bilstm_backward(dPhi, cache, p);
    };
    return grad_check(loss_fn, grad_fn, params);
}

}  // namespace

TEST(BilstmBackward, SingleUpstreamEntryMatchesFiniteDifferences) {
    RnnConfig cfg{1, 3, true, 0.0};
    const std::size_t T = 5, D = 2;
    std::mt19937_64 rng(15);
    Matrix input = segtest::random_matrix(rng, T, D);
    ParamStore params = init_params(rnn_param_specs(D, cfg), 16);
    const std::size_t t0 = 2, f0 = 4;

    auto loss_fn = [&](const ParamStore& p) {
        RnnCache cache;
        return bilstm_forward(input, p, cfg, false, 0, cache)(t0, f0);
    };
    auto grad_fn = [&](const ParamStore& p) {
        RnnCache cache;
        bilstm_forward(input, p, cfg, false, 0, cache);
        Matrix dPhi(T, feature_dim(cfg));
        dPhi(t0, f0) = 1.0;
        return bilstm_backward(dPhi, cache, p);
    };
    EXPECT_LE(grad_check(loss_fn, grad_fn, params), 1e-4);
}

TEST(BilstmBackward, FullGradCheckTwoLayerBidirectional) {
    RnnConfig cfg{2, 4, true, 0.0};
    EXPECT_LE(phi_projection_grad_error(cfg, 8, 3, 100, false, 0), 1e-4);
}

TEST(BilstmBackward, FullGradCheckForwardOnly) {
    RnnConfig cfg{2, 4, false, 0.0};
    EXPECT_LE(phi_projection_grad_error(cfg, 7, 3, 101, false, 0), 1e-4);
}

TEST(BilstmBackward, GradCheckHoldsThroughFixedDropoutMasks) {
    RnnConfig cfg{2, 4, true, 0.3};
    EXPECT_LE(phi_projection_grad_error(cfg, 6, 3, 102, true, 777), 1e-4);
}

TEST(BilstmBackward, MismatchedUpstreamShapeThrows) {
    RnnConfig cfg{1, 3, true, 0.0};
    std::mt19937_64 rng(17);
    Matrix input = segtest::random_matrix(rng, 5, 2);
    ParamStore params = init_params(rnn_param_specs(2, cfg), 18);
    RnnCache cache;
    bilstm_forward(input, params, cfg, false, 0, cache);
    EXPECT_THROW(bilstm_backward(Matrix(5, 3), cache, params), DataError);
}
