/*
 *  Copyright 2026 The chagnn Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chagnn/errors.hpp"
#include "chagnn/gcn.hpp"
#include "chagnn/synthetic.hpp"
#include "test_util.hpp"

namespace chagnn {
namespace {

using testing::dense_sym_norm;
using testing::random_dataset;
using testing::random_matrix;

Matrix dense_softmax(const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < z.cols(); ++j) total += std::exp(z(i, j));
        for (Eigen::Index j = 0; j < z.cols(); ++j) out(i, j) = std::exp(z(i, j)) / total;
    }
    return out;
}

Dataset separable_dataset(std::uint64_t seed) {
    SyntheticSpec s;
    s.num_classes = 2;
    s.nodes_per_class = 100;
    s.degree = 6;
    s.homophily = 1.0;
    s.feature_strength = 1.0;
    return generate_synthetic(s, seed);
}

TEST(GcnForward, ZeroWeightsGiveUniformRows) {
    auto ds = random_dataset(8, 4, 3, 0.3, 1);
    GcnParams p{Matrix::Zero(4, 5), Matrix::Zero(5, 3)};
    const auto soft = gcn_forward(normalize_adjacency(ds.graph), ds.features, p);
    for (std::size_t i = 0; i < soft.rows(); ++i)
        for (double v : soft.row(i)) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(GcnForward, IsolatedNodeIsPlainMlp) {
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(1, 3, rng);
    GcnParams p{random_matrix(3, 4, rng), random_matrix(4, 2, rng)};
    const auto soft = gcn_forward(normalize_adjacency(build_graph({}, 1)), x, p);
    const Matrix expect = dense_softmax((x * p.w1).cwiseMax(0.0) * p.w2);
    EXPECT_LT((soft.probs - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GcnForward, MatchesDenseOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        auto ds = random_dataset(6, 3, 3, 0.5, 100 + static_cast<std::uint64_t>(trial));
        GcnParams p{random_matrix(3, 4, rng), random_matrix(4, 3, rng)};
        const Matrix a = dense_sym_norm(ds.graph);
        const Matrix expect = dense_softmax(a * (a * ds.features * p.w1).cwiseMax(0.0) * p.w2);
        const auto soft = gcn_forward(normalize_adjacency(ds.graph), ds.features, p);
        EXPECT_LT((soft.probs - expect).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(GcnForward, RowsAreDistributionsEvenWhenSaturated) {
    std::mt19937_64 rng(4);
    auto ds = random_dataset(20, 5, 4, 0.2, 4);
    GcnParams p{random_matrix(5, 8, rng, 50.0), random_matrix(8, 4, rng, 50.0)};
    const auto soft = gcn_forward(normalize_adjacency(ds.graph), ds.features, p);
    for (std::size_t i = 0; i < soft.rows(); ++i) {
        double total = 0;
        for (double v : soft.row(i)) {
            EXPECT_GE(v, 0.0);
            total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(GcnForward, DimensionMismatchThrows) {
    auto ds = random_dataset(5, 3, 2, 0.3, 5);
    GcnParams p{Matrix::Zero(4, 2), Matrix::Zero(2, 2)};
    EXPECT_THROW(gcn_forward(normalize_adjacency(ds.graph), ds.features, p), InputError);
}

TEST(SgcForward, IdentityWeightsOnSingleNode) {
    const Matrix x = Matrix::Identity(1, 3);
    const auto out = sgc_forward(normalize_adjacency(build_graph({}, 1)), x, SgcParams{Matrix::Identity(3, 3)});
    EXPECT_EQ(out.logits, x);
}

TEST(SgcForward, ZeroWeightsUniformAndDenseOracle) {
    std::mt19937_64 rng(6);
    auto ds = random_dataset(7, 3, 3, 0.4, 6);
    const auto adj = normalize_adjacency(ds.graph);
    const auto zero = sgc_forward(adj, ds.features, SgcParams{Matrix::Zero(3, 3)});
    for (std::size_t i = 0; i < zero.soft.rows(); ++i)
        for (double v : zero.soft.row(i)) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);

    const Matrix w = random_matrix(3, 3, rng);
    const Matrix a = dense_sym_norm(ds.graph);
    const auto out = sgc_forward(adj, ds.features, SgcParams{w});
    EXPECT_LT((out.logits - a * a * ds.features * w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CmLoss, Examples) {
    const std::vector<double> a{2, 5, 3};
    EXPECT_EQ(cm_loss(a, 1), 2.0);
    const std::vector<double> b{1, 1, 1};
    EXPECT_EQ(cm_loss(b, 2), 0.0);
    const std::vector<double> c{0.1, 0.9};
    EXPECT_NEAR(cm_loss(c, 0), -0.8, 1e-15);
    const std::vector<double> single{1.0};
    EXPECT_THROW(cm_loss(single, 0), InputError);
}

TEST(CmLoss, PositiveIffArgmaxIsTrueClass) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> cls(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        const Matrix z = random_matrix(1, 4, rng);
        const int y = cls(rng);
        const std::span<const double> row(z.data(), 4);
        const auto pred = pseudo_labels(SoftLabelMatrix{softmax_rows(z)});
        EXPECT_EQ(cm_loss(row, y) > 0.0, pred[0] == y);
    }
}

TEST(PseudoLabels, ArgmaxWithLowestTieBreak) {
    Matrix p(3, 4);
    p << 0.2, 0.5, 0.3, 0.0,  //
        0.5, 0.5, 0.0, 0.0,   //
        0.25, 0.25, 0.25, 0.25;
    EXPECT_EQ(pseudo_labels(SoftLabelMatrix{p}), (std::vector<int>{1, 0, 0}));
}

TEST(Accuracy, Examples) {
    const std::vector<int> labels{0, 1, 2, 1};
    const std::vector<bool> all(4, true);
    EXPECT_EQ(accuracy(labels, labels, all), 1.0);
    EXPECT_EQ(accuracy(std::vector<int>{1, 0, 0, 0}, labels, all), 0.0);
    EXPECT_EQ(accuracy(std::vector<int>{0, 1, 2, 0}, labels, all), 0.75);
    EXPECT_THROW(accuracy(labels, labels, std::vector<bool>(4, false)), InputError);
}

TEST(Gradient, BackpropMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto ds = random_dataset(10, 4, 3, 0.3, seed);
        const auto p = init_gcn_params(4, 6, 3, seed);
        EXPECT_LT(gradient_check(ds, p, 1e-5), 1e-4);
        EXPECT_LT(gradient_check(ds, p, 1e-5, 5e-4), 1e-4);
    }
}

TEST(Gradient, FiniteAtZeroParameters) {
    auto ds = random_dataset(10, 4, 3, 0.3, 9);
    GcnParams p{Matrix::Zero(4, 6), Matrix::Zero(6, 3)};
    GcnGradient g;
    const double loss = training_loss_and_gradient(ds, p, 5e-4, g);
    EXPECT_NEAR(loss, std::log(3.0), 1e-12);
    EXPECT_TRUE(g.w1.allFinite());
    EXPECT_TRUE(g.w2.allFinite());
}

TEST(Gradient, SgcMatchesHandDerivedLinearGradient) {
    std::mt19937_64 rng(10);
    auto ds = random_dataset(12, 4, 3, 0.3, 10);
    const auto adj = normalize_adjacency(ds.graph);
    const SgcParams p{random_matrix(4, 3, rng)};
    const auto nodes = ds.train_nodes();
    Matrix grad;
    sgc_loss_and_gradient(adj, ds.features, ds.labels, nodes, p, grad);

    const Matrix a = dense_sym_norm(ds.graph);
    const Matrix ax2 = a * a * ds.features;
    const Matrix probs = dense_softmax(ax2 * p.w);
    Matrix resid = Matrix::Zero(probs.rows(), probs.cols());
    for (NodeId v : nodes) {
        resid.row(v) = probs.row(v);
        resid(v, ds.labels[v]) -= 1.0;
    }
    const Matrix expect = ax2.transpose() * resid / static_cast<double>(nodes.size());
    EXPECT_LT((grad - expect).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Train, SeparableCaseReachesFullTrainAccuracy) {
    const auto ds = separable_dataset(1);
    TrainConfig cfg;
    const auto res = train(ds, cfg, 1);
    ASSERT_FALSE(res.history.empty());
    EXPECT_LE(res.history.size(), 200u);
    const auto pred = pseudo_labels(gcn_forward(normalize_adjacency(ds.graph), ds.features, res.params));
    EXPECT_EQ(accuracy(pred, ds.labels, ds.train_mask), 1.0);
}

TEST(Train, LossNonIncreasingOverTenEpochWindows) {
    const auto ds = separable_dataset(2);
    TrainConfig cfg;
    cfg.patience = cfg.max_epochs;
    const auto res = train(ds, cfg, 2);
    for (std::size_t e = 10; e < res.history.size(); ++e)
        EXPECT_LE(res.history[e].train_loss, res.history[e - 10].train_loss + 1e-12) << "epoch " << e;
}

TEST(Train, SingleEpoch) {
    const auto ds = separable_dataset(3);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    const auto res = train(ds, cfg, 3);
    ASSERT_EQ(res.history.size(), 1u);
    EXPECT_EQ(res.best_epoch, res.history[0].epoch);
}

TEST(Train, Deterministic) {
    const auto ds = random_dataset(30, 4, 3, 0.2, 4);
    TrainConfig cfg;
    EXPECT_EQ(train(ds, cfg, 5).params, train(ds, cfg, 5).params);
}

TEST(Train, NeedsTrainNodes) {
    auto ds = random_dataset(9, 2, 2, 0.3, 5);
    ds.train_mask.assign(9, false);
    EXPECT_THROW(train(ds, TrainConfig{}, 0), InputError);
}

TEST(Train, ConfigValidation) {
    TrainConfig cfg;
    cfg.learning_rate = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.max_epochs = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(FineTune, ZeroEpochsIsIdentity) {
    const auto ds = random_dataset(30, 4, 3, 0.2, 6);
    TrainConfig cfg;
    const auto base = train(ds, cfg, 6).params;
    cfg.fine_tune_epochs = 0;
    EXPECT_EQ(fine_tune(base, ds, cfg).params, base);
}

TEST(FineTune, ValidationLossDoesNotIncrease) {
    const auto ds = random_dataset(40, 4, 3, 0.2, 7);
    TrainConfig cfg;
    cfg.max_epochs = 20;
    const auto base = train(ds, cfg, 7).params;
    const auto adj = normalize_adjacency(ds.graph);
    const auto val = ds.val_nodes();
    auto val_loss = [&](const GcnParams& p) {
        return cross_entropy(gcn_forward(adj, ds.features, p).probs, ds.labels, val);
    };
    const auto tuned = fine_tune(base, ds, cfg);
    EXPECT_LE(val_loss(tuned.params), val_loss(base));
}

TEST(FineTune, DimensionMismatchThrows) {
    const auto ds = random_dataset(12, 4, 3, 0.2, 8);
    const auto p = init_gcn_params(5, 4, 3, 0);
    EXPECT_THROW(fine_tune(p, ds, TrainConfig{}), InputError);
}

TEST(Checkpoint, RoundTripIsExact) {
    const auto p = init_gcn_params(7, 5, 3, 11);
    const auto dir = testing::scratch_dir("ckpt");
    save_params(p, dir / "model.json");
    EXPECT_EQ(load_params(dir / "model.json"), p);
}

}  // namespace
}  // namespace chagnn
