#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fairrank/nn.hpp"
#include "fairrank/rng.hpp"
#include "support/finite_diff.hpp"
#include "support/fixtures.hpp"

using namespace fairrank;
namespace ft = fairrank::testing;

TEST_CASE("init_params produces the contracted shapes and constants", "[nn]") {
    Rng rng(42);
    const ModelParams p = init_params({8, 16, 8, 1}, rng);
    REQUIRE(p.weights.size() == 3);
    REQUIRE(p.weights[0].rows == 8);
    REQUIRE(p.weights[0].cols == 16);
    REQUIRE(p.weights[1].rows == 16);
    REQUIRE(p.weights[1].cols == 8);
    REQUIRE(p.weights[2].rows == 8);
    REQUIRE(p.weights[2].cols == 1);
    for (const auto& b : p.biases)
        for (double x : b) REQUIRE(x == 0.0);
    for (std::size_t l = 0; l < 2; ++l) {
        for (double g : p.bn_scale[l]) REQUIRE(g == 1.0);
        for (double s : p.bn_shift[l]) REQUIRE(s == 0.0);
        for (double m : p.bn_running_mean[l]) REQUIRE(m == 0.0);
        for (double v : p.bn_running_var[l]) REQUIRE(v == 1.0);
    }
    REQUIRE(p.adam.step == 0);

    // Fan-based uniform init keeps weights inside the documented scale.
    const double scale0 = std::sqrt(6.0 / (8 + 16));
    for (double w : p.weights[0].data) {
        REQUIRE(w >= -scale0);
        REQUIRE(w <= scale0);
    }
}

TEST_CASE("init_params is seed-deterministic and seed-sensitive", "[nn]") {
    Rng a(42), b(42), c(1), d(2);
    REQUIRE(ft::params_equal(init_params({8, 16, 8, 1}, a), init_params({8, 16, 8, 1}, b)));
    const ModelParams p1 = init_params({8, 16, 8, 1}, c);
    const ModelParams p2 = init_params({8, 16, 8, 1}, d);
    REQUIRE_FALSE(ft::bitwise_equal(p1.weights[0], p2.weights[0]));
}

TEST_CASE("init_params rejects bad layer lists", "[nn]") {
    Rng rng(1);
    REQUIRE_THROWS_AS(init_params({8, 16, 1}, rng), ConfigError);
    REQUIRE_THROWS_AS(init_params({8, 16, 8, 2}, rng), ConfigError);
}

TEST_CASE("all-zero parameters predict exactly one half", "[nn]") {
    Rng rng(1);
    ModelParams p = init_params({4, 3, 2, 1}, rng);
    for (auto& w : p.weights) w.data.assign(w.data.size(), 0.0);
    Matrix batch = ft::random_batch(5, 4, rng);
    ForwardCache cache;
    for (double pred : forward_train(p, batch, cache)) REQUIRE(pred == 0.5);
    for (double pred : predict(p, batch)) REQUIRE(pred == 0.5);
}

TEST_CASE("eval-mode forward is pure and repeatable", "[nn]") {
    Rng rng(42);
    const ModelParams p = init_params({8, 6, 4, 1}, rng);
    const ModelParams snapshot = p;
    const Matrix batch = ft::random_batch(4, 8, rng);
    const auto first = predict(p, batch);
    const auto second = predict(p, batch);
    REQUIRE(ft::bitwise_equal(first, second));
    REQUIRE(ft::params_equal(p, snapshot));
}

TEST_CASE("forward outputs are finite probabilities strictly inside (0,1)", "[nn]") {
    Rng rng(42);
    ModelParams p = init_params({8, 6, 4, 1}, rng);
    Matrix batch = ft::random_batch(4, 8, rng);
    ForwardCache cache;
    for (double pred : forward_train(p, batch, cache)) {
        REQUIRE(std::isfinite(pred));
        REQUIRE(pred > 0.0);
        REQUIRE(pred < 1.0);
    }
}

TEST_CASE("forward rejects bad batches", "[nn]") {
    Rng rng(1);
    ModelParams p = init_params({4, 3, 2, 1}, rng);
    ForwardCache cache;
    Matrix wrong(3, 5);
    REQUIRE_THROWS_AS(forward_train(p, wrong, cache), ShapeError);
    Matrix single(1, 4);
    REQUIRE_THROWS_AS(forward_train(p, single, cache), DegenerateBatchError);
    REQUIRE_NOTHROW(predict(p, single));  // eval mode has no batch-size floor
}

TEST_CASE("train-mode forward updates running statistics", "[nn]") {
    Rng rng(17);
    ModelParams p = init_params({4, 3, 2, 1}, rng);
    const auto mean_before = p.bn_running_mean[0];
    Matrix batch = ft::random_batch(6, 4, rng);
    ForwardCache cache;
    forward_train(p, batch, cache);
    REQUIRE_FALSE(ft::bitwise_equal(mean_before, p.bn_running_mean[0]));
    for (const auto& layer : p.bn_running_var)
        for (double v : layer) REQUIRE(v >= 0.0);
}

TEST_CASE("backward of a zero upstream gradient is zero and scales linearly", "[nn]") {
    Rng rng(23);
    ModelParams p = init_params({3, 4, 2, 1}, rng);
    Matrix batch = ft::random_batch(6, 3, rng);
    ForwardCache cache;
    forward_train(p, batch, cache);

    const std::vector<double> zeros(6, 0.0);
    for (double g : ft::flatten_gradients(backward(p, cache, zeros))) REQUIRE(g == 0.0);

    std::vector<double> upstream(6);
    for (auto& u : upstream) u = rng.uniform(-1.0, 1.0);
    std::vector<double> doubled = upstream;
    for (auto& u : doubled) u *= 2.0;
    const auto g1 = ft::flatten_gradients(backward(p, cache, upstream));
    const auto g2 = ft::flatten_gradients(backward(p, cache, doubled));
    for (std::size_t i = 0; i < g1.size(); ++i)
        REQUIRE(g2[i] == Catch::Approx(2.0 * g1[i]).margin(1e-12));
}

TEST_CASE("backward rejects a mismatched cache", "[nn]") {
    Rng rng(29);
    ModelParams p = init_params({3, 4, 2, 1}, rng);
    Matrix batch = ft::random_batch(5, 3, rng);
    ForwardCache cache;
    forward_train(p, batch, cache);

    ModelParams other = init_params({3, 5, 2, 1}, rng);
    REQUIRE_THROWS_AS(backward(other, cache, std::vector<double>(5, 0.1)), InvariantError);
    REQUIRE_THROWS_AS(backward(p, cache, std::vector<double>(4, 0.1)), ShapeError);
}

TEST_CASE("analytic gradients match central finite differences", "[nn]") {
    // The spec's reference instance plus a handful of random ones.
    Rng rng(31);
    {
        ModelParams p = init_params({3, 4, 2, 1}, rng);
        Matrix batch = ft::random_batch(6, 3, rng);
        auto labels = ft::random_labels(6, rng);
        GroupMasks masks;
        FairnessSpec spec;  // pure BCE
        const auto analytic = ft::analytic_gradient(p, batch, labels, masks, spec);
        const auto numerical = ft::numerical_gradient(p, batch, labels, masks, spec);
        REQUIRE(ft::gradients_match(analytic, numerical));
    }
    for (int trial = 0; trial < 4; ++trial) {
        const std::size_t h1 = 2 + rng.below(5);
        const std::size_t h2 = 2 + rng.below(4);
        const std::size_t features = 2 + rng.below(4);
        const std::size_t rows = 3 + rng.below(6);
        ModelParams p = init_params({features, h1, h2, 1}, rng);
        Matrix batch = ft::random_batch(rows, features, rng);
        auto labels = ft::random_labels(rows, rng);
        GroupMasks masks;
        FairnessSpec spec;
        const auto analytic = ft::analytic_gradient(p, batch, labels, masks, spec);
        const auto numerical = ft::numerical_gradient(p, batch, labels, masks, spec);
        REQUIRE(ft::gradients_match(analytic, numerical));
    }
}

TEST_CASE("adam ignores zero gradients except for the step counter", "[nn]") {
    Rng rng(37);
    ModelParams p = init_params({3, 4, 2, 1}, rng);
    const ModelParams before = p;

    Gradients zero;
    for (const auto& w : p.weights) zero.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : p.biases) zero.biases.emplace_back(b.size(), 0.0);
    for (const auto& g : p.bn_scale) zero.bn_scale.emplace_back(g.size(), 0.0);
    for (const auto& s : p.bn_shift) zero.bn_shift.emplace_back(s.size(), 0.0);

    adam_step(p, zero, 0.001);
    REQUIRE(p.adam.step == 1);
    for (std::size_t l = 0; l < p.weights.size(); ++l)
        REQUIRE(ft::bitwise_equal(p.weights[l], before.weights[l]));
}

TEST_CASE("first adam step moves a unit-gradient parameter by -lr", "[nn]") {
    Rng rng(41);
    ModelParams p = init_params({3, 4, 2, 1}, rng);
    for (auto& w : p.weights) w.data.assign(w.data.size(), 0.0);

    Gradients g;
    for (const auto& w : p.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : p.biases) g.biases.emplace_back(b.size(), 0.0);
    for (const auto& s : p.bn_scale) g.bn_scale.emplace_back(s.size(), 0.0);
    for (const auto& s : p.bn_shift) g.bn_shift.emplace_back(s.size(), 0.0);
    g.weights[0](0, 0) = 1.0;

    adam_step(p, g, 0.001);
    // Bias-corrected first step: -lr * 1 / (1 + eps).
    REQUIRE(p.weights[0](0, 0) == Catch::Approx(-0.001).margin(1e-9));
    REQUIRE(p.weights[0](0, 1) == 0.0);
}

TEST_CASE("adam is deterministic and rejects non-finite gradients", "[nn]") {
    Rng rng(43);
    ModelParams a = init_params({3, 4, 2, 1}, rng);
    ModelParams b = a;

    Gradients g;
    for (const auto& w : a.weights) {
        Matrix gw(w.rows, w.cols);
        for (auto& x : gw.data) x = rng.uniform(-0.5, 0.5);
        g.weights.push_back(std::move(gw));
    }
    for (const auto& bias : a.biases) g.biases.emplace_back(bias.size(), 0.1);
    for (const auto& s : a.bn_scale) g.bn_scale.emplace_back(s.size(), 0.05);
    for (const auto& s : a.bn_shift) g.bn_shift.emplace_back(s.size(), -0.05);

    adam_step(a, g, 0.001);
    adam_step(b, g, 0.001);
    REQUIRE(ft::params_equal(a, b));

    const ModelParams before = a;
    g.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(adam_step(a, g, 0.001), NumericError);
    REQUIRE(ft::params_equal(a, before));  // failed step leaves state untouched
}

TEST_CASE("bce matches hand-computed values", "[nn]") {
    const auto symmetric = bce_loss({0.5, 0.5}, {1.0, 0.0});
    REQUIRE(symmetric.loss == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    const auto perfect = bce_loss({1.0, 0.0, 1.0}, {1.0, 0.0, 1.0});
    REQUIRE(perfect.loss <= 1e-10);

    REQUIRE_THROWS_AS(bce_loss({0.5}, {1.0, 0.0}), ShapeError);
}

TEST_CASE("bce gradient matches finite differences", "[nn]") {
    Rng rng(47);
    std::vector<double> preds(8), labels(8);
    for (auto& p : preds) p = rng.uniform(0.05, 0.95);
    for (auto& y : labels) y = rng.uniform() < 0.5 ? 0.0 : 1.0;

    const auto analytic = bce_loss(preds, labels);
    const auto numerical = ft::numerical_gradient_wrt_predictions(
        [&](const std::vector<double>& p) { return bce_loss(p, labels).loss; }, preds);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double rel = std::abs(analytic.grad[i] - numerical[i]) /
                           std::max(1e-12, std::abs(numerical[i]));
        REQUIRE(rel < 1e-6);
    }
}

TEST_CASE("a fixed seed drives a bitwise-reproducible update sequence", "[nn]") {
    auto run = [] {
        Rng rng(99);
        ModelParams p = init_params({5, 6, 3, 1}, rng);
        for (int step = 0; step < 5; ++step) {
            Matrix batch = ft::random_batch(8, 5, rng);
            auto labels = ft::random_labels(8, rng);
            ForwardCache cache;
            auto preds = forward_train(p, batch, cache);
            auto bce = bce_loss(preds, labels);
            adam_step(p, backward(p, cache, bce.grad), 0.001);
        }
        return p;
    };
    REQUIRE(ft::params_equal(run(), run()));
}
