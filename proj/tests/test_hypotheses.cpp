#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mmse/approx.hpp"
#include "mmse/hypotheses.hpp"
#include "mmse/training.hpp"

using namespace mmse;

TEST_CASE("zero models predict one half") {
    const Logistic lg{{0.0, 0.0}, 0.0};
    CHECK(predict(lg, Vec{3.0, -1.0}) == 0.5);

    ShallowNet net;
    net.w1 = Mat(4, 2, 0.3);
    net.b1 = Vec(4, 0.1);
    net.w2 = Vec(4, 0.0);
    net.b2 = 0.0;
    CHECK(predict(net, Vec{1.0, 2.0}) == 0.5);
}

TEST_CASE("logistic closed form value") {
    const Logistic lg{{1.0}, 0.0};
    CHECK(predict(lg, Vec{std::log(3.0)}) == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("predict rejects dimension mismatch") {
    const Logistic lg{{1.0, 2.0}, 0.0};
    CHECK_THROWS_AS(predict(lg, Vec{1.0}), std::invalid_argument);
}

TEST_CASE("emp_mse exact cases") {
    const JointModel model = Bsc{0.5, 0.0};
    const NoisyDataset ds = sample(model, 400, 0.0, 5);

    SECTION("a predictor matching S on the identity channel scores zero") {
        const Logistic match{{1000.0}, -500.0};
        CHECK(emp_mse(Hypothesis{match}, ds) == 0.0);
    }
    SECTION("the constant half predictor scores exactly one quarter") {
        const Logistic half{{0.0}, 0.0};
        CHECK(emp_mse(Hypothesis{half}, ds) == 0.25);
    }
}

TEST_CASE("empirical mse stays within [0,1] for probabilistic predictors") {
    const JointModel model = CcgDiag{0.25, {-1.0}, {1.0}, 1.0, 3.0};
    const NoisyDataset ds = sample(model, 2000, 1.0, 9);
    Rng rng(77);
    for (int t = 0; t < 10; ++t) {
        const Logistic lg{{rng.uniform(-5.0, 5.0)}, rng.uniform(-5.0, 5.0)};
        const double v = emp_mse(Hypothesis{lg}, ds);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("mse of the population-optimal model decomposes into mmse plus eps_a") {
    // E[(S-h)^2] = E[(S-eta)^2] + E[(eta-h)^2]; the empirical gap is the
    // sampled cross term, which must be mean-zero
    const JointModel model = Bsc{0.25, 0.25};
    const double sigma = 1.0;
    const NoisyDataset fit_half = sample(model, 1000000, sigma, 41);
    const NoisyDataset eval_half = sample(model, 1000000, sigma, 42);
    const ThetaEvaluator theta(model, sigma);
    const Logistic hstar = fit_logistic_closed_form(fit_half, theta);

    double cross = 0.0, cross2 = 0.0;
    const std::size_t n = eval_half.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = eval_half.xs.row(i);
        const double eta = sigmoid(theta(x));
        const double c = 2.0 * (eval_half.ss[i] - eta) * (eta - predict(hstar, x));
        cross += c;
        cross2 += c * c;
    }
    cross /= static_cast<double>(n);
    const double se = std::sqrt((cross2 / n - cross * cross) / n);

    const double mse = emp_mse(Hypothesis{hstar}, eval_half);
    const double mmse = mmse_mc_on(eval_half, model).value;
    const double eps_a = eps_a_mc_on(eval_half, model, Hypothesis{hstar}).value;
    CHECK(mse - mmse - eps_a == Catch::Approx(cross).margin(1e-12));
    CHECK(std::abs(cross) <= 4.0 * se);
}

TEST_CASE("canonical weight format is stable") {
    const Logistic lg{{1.0}, -2.0};
    const auto bytes = serialize_weights(Hypothesis{lg});
    REQUIRE(bytes.size() == 6 + 1 + 8 + 16);
    CHECK(bytes[0] == 'M');
    CHECK(bytes[5] == '1');
    CHECK(bytes[6] == 0);                    // logistic tag
    CHECK(bytes[7] == 1);                    // d = 1, little endian
    CHECK(bytes[8] == 0);
    CHECK(bytes[11] == 0);                   // d_w = 0
    // 1.0 as little-endian f64: 00 00 00 00 00 00 f0 3f
    CHECK(bytes[15 + 6] == 0xf0);
    CHECK(bytes[15 + 7] == 0x3f);
}

TEST_CASE("compressed size is deterministic and small for tiny models") {
    const Logistic lg{{0.35}, -0.2};
    const std::size_t c1 = compressed_size_bits(Hypothesis{lg});
    const std::size_t c2 = compressed_size_bits(Hypothesis{lg});
    CHECK(c1 == c2);
    CHECK(c1 < 2000);  // header-dominated regression ceiling
    CHECK(c1 > 0);
}

TEST_CASE("compressed size of a trained shallow net has the expected magnitude") {
    const JointModel model = RingMixture{0.5, 3, 2.0};
    const NoisyDataset ds = sample(model, 500, 2.0, 13);
    TrainConfig cfg = TrainConfig::net_defaults(10, 300);
    cfg.seed = 1;
    const Hypothesis net = train(HypothesisClass::shallow_net, cfg, ds);
    const std::size_t c = compressed_size_bits(net);
    // 41 doubles of trained weights barely compress, so the description
    // length lands in the few-kilobit band; regression envelope
    CHECK(c >= 2400);
    CHECK(c <= 240000);
}
