#include <gtest/gtest.h>

#include <sstream>

#include "segmentor/adagrad.hpp"
#include "segmentor/grad_check.hpp"
#include "segmentor/param_store.hpp"

using namespace seg;

TEST(InitParams, DeterministicGivenSeed) {
    std::vector<GroupSpec> spec{{"a", {2, 2}, ParamInit::GlorotUniform}};
    ParamStore s1 = init_params(spec, 7);
    ParamStore s2 = init_params(spec, 7);
    EXPECT_TRUE(s1 == s2);
    ParamStore s3 = init_params(spec, 8);
    EXPECT_FALSE(s1 == s3);
}

TEST(InitParams, ForgetGateBiasIsOne) {
    std::vector<GroupSpec> spec{{"b", {12}, ParamInit::LstmBias}};  // H = 3
    ParamStore s = init_params(spec, 1);
    const auto& b = s.values("b");
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(b[i], 0.0);
    for (std::size_t i = 3; i < 6; ++i) EXPECT_EQ(b[i], 1.0);
    for (std::size_t i = 6; i < 12; ++i) EXPECT_EQ(b[i], 0.0);
}

TEST(InitParams, GlorotBound) {
    std::vector<GroupSpec> spec{{"W", {4, 4}, ParamInit::GlorotUniform}};
    ParamStore s = init_params(spec, 123);
    double r = std::sqrt(6.0 / 8.0);
    bool nonzero = false;
    for (double v : s.values("W")) {
        EXPECT_LE(std::abs(v), r);
        nonzero |= v != 0.0;
    }
    EXPECT_TRUE(nonzero);
}

TEST(InitParams, RankOneGlorotUsesLengthAsFanIn) {
    std::vector<GroupSpec> spec{{"w", {32}, ParamInit::GlorotUniform}};
    ParamStore s = init_params(spec, 5);
    double r = std::sqrt(6.0 / 33.0);
    for (double v : s.values("w")) EXPECT_LE(std::abs(v), r);
}

TEST(InitParams, RejectsZeroDimension) {
    std::vector<GroupSpec> spec{{"bad", {3, 0}, ParamInit::Zero}};
    EXPECT_THROW(init_params(spec, 1), DataError);
}

TEST(ParamStore, RejectsDuplicateNames) {
    ParamStore s;
    s.add("x", {2});
    EXPECT_THROW(s.add("x", {2}), DataError);
}

TEST(AdaGrad, ZeroGradientLeavesEverythingUnchanged) {
    ParamStore p = init_params({{"w", {3, 3}}}, 9);
    ParamStore before = p;
    AdaGradState st = make_adagrad(p, 0.1);
    adagrad_step(p, p.zero_like(), st);
    EXPECT_TRUE(p == before);
    for (double v : st.accum.values("w")) EXPECT_EQ(v, 0.0);
}

TEST(AdaGrad, SingleStepMatchesUpdateRule) {
    ParamStore p;
    p.add("w", {1});
    AdaGradState st = make_adagrad(p, 0.1, 1e-8);
    GradientBundle g = p.zero_like();
    g.values("w")[0] = 2.0;
    adagrad_step(p, g, st);
    // G = 4; theta = -0.1 * 2 / (2 + 1e-8)
    EXPECT_DOUBLE_EQ(st.accum.values("w")[0], 4.0);
    EXPECT_NEAR(p.values("w")[0], -0.1, 1e-8);
}

TEST(AdaGrad, RepeatedEqualGradientsShrinkTheStep) {
    ParamStore p;
    p.add("w", {1});
    AdaGradState st = make_adagrad(p, 0.1);
    GradientBundle g = p.zero_like();
    g.values("w")[0] = 1.5;
    adagrad_step(p, g, st);
    double step1 = -p.values("w")[0];
    double prev = p.values("w")[0];
    adagrad_step(p, g, st);
    double step2 = prev - p.values("w")[0];
    EXPECT_GT(step1, step2);
    EXPECT_GT(step2, 0.0);
}

TEST(AdaGrad, EffectiveStepNonincreasingPerCoordinate) {
    ParamStore p = init_params({{"w", {8}}}, 3);
    AdaGradState st = make_adagrad(p, 0.05);
    std::mt19937_64 rng(11);
    std::vector<double> prev_step(8, 1e300);
    for (int iter = 0; iter < 50; ++iter) {
        GradientBundle g = p.zero_like();
        for (double& v : g.values("w")) v = uniform_sym(rng, 2.0);
        adagrad_step(p, g, st);
        for (std::size_t i = 0; i < 8; ++i) {
            double eff = st.eta / (std::sqrt(st.accum.values("w")[i]) + st.eps);
            EXPECT_LE(eff, prev_step[i] * (1.0 + 1e-12));
            prev_step[i] = eff;
        }
    }
}

TEST(AdaGrad, ShapeMismatchThrows) {
    ParamStore p = init_params({{"w", {2}}}, 1);
    ParamStore q = init_params({{"w", {3}}}, 1);
    AdaGradState st = make_adagrad(p);
    EXPECT_THROW(adagrad_step(p, q.zero_like(), st), DataError);
}

TEST(AdaGrad, NonFiniteGradientThrows) {
    ParamStore p = init_params({{"w", {2}}}, 1);
    AdaGradState st = make_adagrad(p);
    GradientBundle g = p.zero_like();
    g.values("w")[1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(adagrad_step(p, g, st), NumericError);
}

namespace {

double quadratic_loss(const ParamStore& p) {
    double s = 0.0;
    for (const auto& g : p.groups())
        for (double v : g.values) s += v * v;
    return s;
}

GradientBundle quadratic_grad(const ParamStore& p, double scale) {
    GradientBundle out = p.zero_like();
    for (std::size_t gi = 0; gi < p.groups().size(); ++gi)
        for (std::size_t i = 0; i < p.groups()[gi].values.size(); ++i)
            out.groups()[gi].values[i] = scale * 2.0 * p.groups()[gi].values[i];
    return out;
}

}  // namespace

TEST(GradCheck, QuadraticIsExact) {
    ParamStore p = init_params({{"a", {3, 2}}, {"b", {4}}}, 21);
    double err = grad_check(quadratic_loss, [](const ParamStore& q) { return quadratic_grad(q, 1.0); }, p);
    EXPECT_LE(err, 1e-7);
}

TEST(GradCheck, DetectsPlantedFault) {
    ParamStore p = init_params({{"a", {3, 2}}}, 22);
    double err = grad_check(quadratic_loss, [](const ParamStore& q) { return quadratic_grad(q, 1.01); }, p);
    EXPECT_GE(err, 9e-3);
}

TEST(GradCheck, NonFiniteLossThrows) {
    ParamStore p = init_params({{"a", {2}}}, 4);
    auto bad_loss = [](const ParamStore&) { return std::numeric_limits<double>::infinity(); };
    EXPECT_THROW(grad_check(bad_loss, [](const ParamStore& q) { return q.zero_like(); }, p),
                 NumericError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    ParamStore p = init_params({{"rnn.l0.fwd.Wx", {16, 5}}, {"w1", {8}}, {"b", {16}, ParamInit::LstmBias}}, 77);
    std::ostringstream os1(std::ios::binary);
    save_params(os1, p);
    std::istringstream is(os1.str(), std::ios::binary);
    ParamStore q = load_params(is);
    EXPECT_TRUE(p == q);
    std::ostringstream os2(std::ios::binary);
    save_params(os2, q);
    EXPECT_EQ(os1.str(), os2.str());
}

TEST(Checkpoint, BadMagicThrows) {
    std::istringstream is("XXXXrest", std::ios::binary);
    EXPECT_THROW(load_params(is), DataError);
}

TEST(Checkpoint, TruncatedPayloadThrows) {
    ParamStore p = init_params({{"w", {64}}}, 1);
    std::ostringstream os(std::ios::binary);
    save_params(os, p);
    std::string bytes = os.str();
    std::istringstream is(bytes.substr(0, bytes.size() / 2), std::ios::binary);
    EXPECT_THROW(load_params(is), DataError);
}
