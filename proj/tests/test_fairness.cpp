#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fairrank/fairness.hpp"
#include "fairrank/rng.hpp"
#include "support/finite_diff.hpp"
#include "support/fixtures.hpp"

using namespace fairrank;
namespace ft = fairrank::testing;

TEST_CASE("group_rate is the masked mean", "[fairness]") {
    REQUIRE(group_rate({0.8, 0.4, 0.6}, {true, false, true}) == Catch::Approx(0.7));

    const std::vector<double> preds = {0.1, 0.9, 0.3, 0.7};
    const double overall = std::accumulate(preds.begin(), preds.end(), 0.0) / 4.0;
    REQUIRE(group_rate(preds, {true, true, true, true}) == Catch::Approx(overall));

    REQUIRE(group_rate({0.3, 0.3, 0.3}, {false, true, true}) == Catch::Approx(0.3));

    REQUIRE_THROWS_AS(group_rate({0.5, 0.5}, {false, false}), EmptyGroupError);
    REQUIRE_THROWS_AS(group_rate({0.5, 0.5}, {true}), ShapeError);
}

TEST_CASE("single-attribute parity loss evaluates the squared gap", "[fairness]") {
    const auto r = parity_loss_single({0.8, 0.4}, {true, false});
    REQUIRE(r.loss == Catch::Approx(0.16).margin(1e-15));

    // Dyadic values make the group means exact, so parity is an exact zero.
    const auto zero = parity_loss_single({0.5, 0.5, 0.5, 0.5}, {true, true, false, false});
    REQUIRE(zero.loss == 0.0);
    for (double g : zero.grad) REQUIRE(g == 0.0);

    REQUIRE_THROWS_AS(parity_loss_single({0.5, 0.5}, {true, true}), EmptyGroupError);
    REQUIRE_THROWS_AS(parity_loss_single({0.5, 0.5}, {false, false}), EmptyGroupError);
}

TEST_CASE("single-attribute gradient matches finite differences", "[fairness]") {
    Rng rng(5);
    std::vector<double> preds(10);
    for (auto& p : preds) p = rng.uniform(0.05, 0.95);
    const auto mask = ft::random_mask(10, rng);

    const auto analytic = parity_loss_single(preds, mask);
    const auto numerical = ft::numerical_gradient_wrt_predictions(
        [&](const std::vector<double>& p) { return parity_loss_single(p, mask).loss; }, preds);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double rel = std::abs(analytic.grad[i] - numerical[i]) /
                           std::max(1e-9, std::abs(numerical[i]));
        REQUIRE(rel < 1e-6);
    }
}

TEST_CASE("single-attribute gradient sums to the documented group totals", "[fairness]") {
    Rng rng(6);
    std::vector<double> preds(12);
    for (auto& p : preds) p = rng.uniform(0.0, 1.0);
    const auto mask = ft::random_mask(12, rng);

    const double mu_p = group_rate(preds, mask);
    std::vector<bool> inverted(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) inverted[i] = !mask[i];
    const double mu_np = group_rate(preds, inverted);

    const auto r = parity_loss_single(preds, mask);
    double sum_protected = 0.0, sum_rest = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        (mask[i] ? sum_protected : sum_rest) += r.grad[i];
    REQUIRE(sum_protected == Catch::Approx(2.0 * (mu_p - mu_np)).margin(1e-12));
    REQUIRE(sum_rest == Catch::Approx(-2.0 * (mu_p - mu_np)).margin(1e-12));
}

TEST_CASE("combined parity loss compares groups against the overall mean", "[fairness]") {
    // Race group mean 0.6, overall mean 0.5, country group = everyone so its
    // term vanishes identically; loss = 0.32 * 0.1^2.
    const std::vector<double> preds = {0.7, 0.5, 0.4, 0.4};
    GroupMasks masks;
    masks.protected_race = {true, true, false, false};
    masks.protected_country = {true, true, true, true};
    const auto r = parity_loss_combined(preds, masks, 0.32, 0.68);
    REQUIRE(r.loss == Catch::Approx(0.0032).margin(1e-15));

    GroupMasks uniform;
    uniform.protected_race = {true, false, true, false};
    uniform.protected_country = {false, true, false, true};
    const auto zero = parity_loss_combined({0.25, 0.25, 0.25, 0.25}, uniform, 0.32, 0.68);
    REQUIRE(zero.loss == 0.0);
    for (double g : zero.grad) REQUIRE(g == 0.0);

    GroupMasks empty;
    empty.protected_race = {false, false, false, false};
    empty.protected_country = {true, false, false, false};
    REQUIRE_THROWS_AS(parity_loss_combined(preds, empty, 0.32, 0.68), EmptyGroupError);
}

TEST_CASE("combined gradient matches finite differences with overlapping masks", "[fairness]") {
    Rng rng(7);
    std::vector<double> preds(12);
    for (auto& p : preds) p = rng.uniform(0.05, 0.95);
    GroupMasks masks;
    masks.protected_race = ft::random_mask(12, rng);
    masks.protected_country = ft::random_mask(12, rng);

    const auto analytic = parity_loss_combined(preds, masks, 0.32, 0.68);
    const auto numerical = ft::numerical_gradient_wrt_predictions(
        [&](const std::vector<double>& p) {
            return parity_loss_combined(p, masks, 0.32, 0.68).loss;
        },
        preds);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double rel = std::abs(analytic.grad[i] - numerical[i]) /
                           std::max(1e-9, std::abs(numerical[i]));
        REQUIRE(rel < 1e-6);
    }
}

TEST_CASE("parity losses are non-negative and permutation invariant", "[fairness]") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 4 + rng.below(12);
        std::vector<double> preds(n);
        for (auto& p : preds) p = rng.uniform(0.0, 1.0);
        GroupMasks masks;
        masks.protected_race = ft::random_mask(n, rng);
        masks.protected_country = ft::random_mask(n, rng);

        const double single = parity_loss_single(preds, masks.protected_race).loss;
        const double combined = parity_loss_combined(preds, masks, 0.32, 0.68).loss;
        REQUIRE(single >= 0.0);
        REQUIRE(combined >= 0.0);

        // Jointly permute and re-evaluate.
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        std::vector<double> preds_p(n);
        GroupMasks masks_p;
        masks_p.protected_race.resize(n);
        masks_p.protected_country.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            preds_p[i] = preds[perm[i]];
            masks_p.protected_race[i] = masks.protected_race[perm[i]];
            masks_p.protected_country[i] = masks.protected_country[perm[i]];
        }
        REQUIRE(parity_loss_single(preds_p, masks_p.protected_race).loss ==
                Catch::Approx(single).margin(1e-12));
        REQUIRE(parity_loss_combined(preds_p, masks_p, 0.32, 0.68).loss ==
                Catch::Approx(combined).margin(1e-12));
    }
}

TEST_CASE("flipping predictions to 1-p leaves the squared gaps unchanged", "[fairness]") {
    Rng rng(9);
    const std::size_t n = 10;
    std::vector<double> preds(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
        preds[i] = rng.uniform(0.0, 1.0);
        flipped[i] = 1.0 - preds[i];
    }
    GroupMasks masks;
    masks.protected_race = ft::random_mask(n, rng);
    masks.protected_country = ft::random_mask(n, rng);

    REQUIRE(parity_loss_single(flipped, masks.protected_race).loss ==
            Catch::Approx(parity_loss_single(preds, masks.protected_race).loss).margin(1e-12));
    REQUIRE(parity_loss_combined(flipped, masks, 0.32, 0.68).loss ==
            Catch::Approx(parity_loss_combined(preds, masks, 0.32, 0.68).loss).margin(1e-12));
}

TEST_CASE("fairness spec validation", "[fairness]") {
    FairnessSpec spec;
    spec.lambda = -1.0;
    REQUIRE_THROWS_AS(spec.validate(), ConfigError);
    spec.lambda = 0.0;
    spec.w_race = -0.1;
    REQUIRE_THROWS_AS(spec.validate(), ConfigError);
    spec.w_race = 0.32;
    REQUIRE_NOTHROW(spec.validate());
    REQUIRE(fairness_mode_from_string("race") == FairnessMode::race_only);
    REQUIRE_THROWS_AS(fairness_mode_from_string("gender"), ConfigError);
}
