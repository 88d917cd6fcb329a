#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "trenn/losses.hpp"

using namespace trenn;
using trenn::testing::check_gradients;
using trenn::testing::random_tensor;

TEST_CASE("mse matches a hand-computed mean of squared errors") {
    Tape tape;
    Var pred = tape.leaf(Tensor(3, 1, {1.0, 2.0, 3.0}));
    Tensor target(3, 1, {1.5, 2.0, 1.0});
    const double expected = (0.25 + 0.0 + 4.0) / 3.0;
    CHECK(tape.value(mse_loss(tape, pred, target)).item() == doctest::Approx(expected));
}

TEST_CASE("mse rejects shape mismatches") {
    Tape tape;
    Var pred = tape.leaf(Tensor(3, 1));
    CHECK_THROWS_AS(mse_loss(tape, pred, Tensor(2, 1)), std::invalid_argument);
}

TEST_CASE("ranking loss enumerates strictly ordered pairs only") {
    Tape tape;
    // labels 5, 3, 3, 1: ordered pairs (0,1) (0,2) (0,3) (1,3) (2,3); the
    // 3-vs-3 tie contributes nothing
    Var scores = tape.leaf(Tensor(4, 1, {2.0, 1.0, 0.5, 0.0}));
    Tensor labels(4, 1, {5.0, 3.0, 3.0, 1.0});
    RankingLoss r = pairwise_ranking_loss(tape, scores, labels, 1.0);
    CHECK(r.n_pairs == 5);
    CHECK_FALSE(r.degenerate);
    // hand enumeration of max(0, 1 - (s_i - s_j)) over those pairs
    const double expected = 0.0 + 0.0 + 0.0 + 0.0 + 0.5;
    CHECK(tape.value(r.loss).item() == doctest::Approx(expected));
}

TEST_CASE("ranking loss is zero when all ordered gaps meet the margin") {
    Tape tape;
    Var scores = tape.leaf(Tensor(3, 1, {3.0, 1.5, 0.0}));
    Tensor labels(3, 1, {3.0, 2.0, 1.0});
    RankingLoss r = pairwise_ranking_loss(tape, scores, labels, 1.0);
    CHECK(tape.value(r.loss).item() == doctest::Approx(0.0));
}

TEST_CASE("ranking loss equals margin times pair count for all-equal scores") {
    Tape tape;
    Var scores = tape.leaf(Tensor(3, 1, {0.7, 0.7, 0.7}));
    Tensor labels(3, 1, {3.0, 2.0, 1.0});
    RankingLoss r = pairwise_ranking_loss(tape, scores, labels, 0.8);
    CHECK(r.n_pairs == 3);
    CHECK(tape.value(r.loss).item() == doctest::Approx(0.8 * 3));
}

TEST_CASE("single-member ranking degenerates to zero loss") {
    Tape tape;
    Var scores = tape.leaf(Tensor(1, 1, {2.0}));
    RankingLoss r = pairwise_ranking_loss(tape, scores, Tensor(1, 1, {4.0}), 1.0);
    CHECK(r.degenerate);
    CHECK(tape.value(r.loss).item() == 0.0);
}

TEST_CASE("ranking loss gradients match finite differences") {
    std::mt19937_64 rng(7);
    Tensor labels(4, 1, {4.0, 3.0, 2.0, 1.0});
    auto r = check_gradients(
        [&](Tape& t, const std::vector<Var>& in) {
            return pairwise_ranking_loss(t, in[0], labels, 1.0).loss;
        },
        {random_tensor(4, 1, rng)});
    CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("multi-task weights are exp(alpha), strictly positive") {
    Tape tape;
    Var l1 = tape.leaf(Tensor::scalar(0.5));
    Var l2 = tape.leaf(Tensor::scalar(2.0));
    Var alpha = tape.leaf(Tensor(1, 2, {-0.3, 1.2}), true);
    Var total = mtl_loss(tape, {l1, l2}, {"a", "b"}, alpha);
    const double expected = std::exp(-0.3) * 0.5 + std::exp(1.2) * 2.0;
    CHECK(tape.value(total).item() == doctest::Approx(expected));
    // d total / d alpha_i = exp(alpha_i) * L_i, always > 0 for positive losses
    GradMap grads = tape.backward(total);
    CHECK(grads.at(alpha).at(0, 0) == doctest::Approx(std::exp(-0.3) * 0.5));
    CHECK(grads.at(alpha).at(0, 1) == doctest::Approx(std::exp(1.2) * 2.0));
}

TEST_CASE("alpha = 0 reduces the combination to a plain sum") {
    Tape tape;
    Var l1 = tape.leaf(Tensor::scalar(0.7));
    Var l2 = tape.leaf(Tensor::scalar(1.1));
    Var l3 = tape.leaf(Tensor::scalar(0.2));
    Var alpha = tape.leaf(Tensor(1, 3));
    Var total = mtl_loss(tape, {l1, l2, l3}, {"a", "b", "c"}, alpha);
    CHECK(tape.value(total).item() == doctest::Approx(0.7 + 1.1 + 0.2));
}

TEST_CASE("mtl rejects mismatched alpha shapes") {
    Tape tape;
    Var l1 = tape.leaf(Tensor::scalar(0.5));
    Var alpha = tape.leaf(Tensor(1, 2));
    CHECK_THROWS_AS(mtl_loss(tape, {l1}, {"a"}, alpha), std::invalid_argument);
}
