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

#include <set>

#include "chagnn/attack.hpp"
#include "chagnn/errors.hpp"
#include "chagnn/synthetic.hpp"
#include "test_util.hpp"

namespace chagnn {
namespace {

Dataset small_synthetic(std::uint64_t seed, double noise = 0.5) {
    SyntheticSpec s;
    s.num_classes = 3;
    s.nodes_per_class = 60;
    s.degree = 6;
    s.homophily = 0.8;
    s.feature_noise = noise;
    return generate_synthetic(s, seed);
}

AttackBudget budget_of(std::size_t ni, std::size_t degree, std::size_t iters = 5) {
    AttackBudget b;
    b.num_inject = ni;
    b.inject_degree = degree;
    b.opt_iters = iters;
    return b;
}

void expect_same(const PoisonedDataset& a, const PoisonedDataset& b) {
    EXPECT_EQ(a.merged, b.merged);
    EXPECT_EQ(a.merged.features, b.merged.features);
    EXPECT_EQ(a.injected_ids, b.injected_ids);
    EXPECT_EQ(a.target_set, b.target_set);
}

double test_acc(const Dataset& ds, const GcnParams& p) {
    return accuracy(pseudo_labels(gcn_forward(normalize_adjacency(ds.graph), ds.features, p)), ds.labels, ds.test_mask);
}

TEST(Heuristic, ZeroInjectionLeavesDatasetUntouched) {
    const auto ds = small_synthetic(1);
    const auto p = heuristic_inject(ds, budget_of(0, 5), 1);
    EXPECT_EQ(p.merged, ds);
    EXPECT_TRUE(p.injected_ids.empty());
    EXPECT_TRUE(p.target_set.empty());
}

TEST(Heuristic, EdgeCountAndIncidence) {
    const auto ds = small_synthetic(2);
    const auto p = heuristic_inject(ds, budget_of(10, 5), 2);
    EXPECT_EQ(p.merged.graph.num_edges(), ds.graph.num_edges() + 50);
    const std::size_t n = ds.num_nodes();
    std::set<NodeId> touched;
    for (const auto& [u, v] : p.merged.graph.edges()) {
        if (u < n && v < n) {
            EXPECT_TRUE(ds.graph.has_edge(u, v));
            continue;
        }
        EXPECT_GE(v, n);
        EXPECT_LT(u, n);
        EXPECT_TRUE(ds.test_mask[u]);
        touched.insert(u);
    }
    for (NodeId i : p.injected_ids) EXPECT_EQ(p.merged.graph.degree(i), 5u);
    EXPECT_EQ(std::vector<NodeId>(touched.begin(), touched.end()), p.target_set);
    EXPECT_FALSE(verify_injection_constraints(p).has_value());
}

TEST(Heuristic, MeanFeatureInitialization) {
    const auto ds = small_synthetic(3);
    const auto p = heuristic_inject(ds, budget_of(4, 3), 3);
    const Eigen::RowVectorXd mean = ds.features.colwise().mean();
    for (NodeId i : p.injected_ids) EXPECT_LT((p.merged.features.row(i) - mean).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Heuristic, Deterministic) {
    const auto ds = small_synthetic(4);
    expect_same(heuristic_inject(ds, budget_of(8, 4), 9), heuristic_inject(ds, budget_of(8, 4), 9));
}

TEST(Heuristic, InfeasibleDegree) {
    const auto ds = small_synthetic(5);
    EXPECT_THROW(heuristic_inject(ds, budget_of(2, ds.test_nodes().size() + 1), 0), ConfigError);
}

TEST(Budget, Validation) {
    auto b = budget_of(3, 0);
    EXPECT_THROW(b.validate(), ConfigError);
    b = budget_of(3, 2);
    b.feature_min = 1.0;
    b.feature_max = 0.0;
    EXPECT_THROW(b.validate(), ConfigError);
    b = budget_of(3, 2);
    b.momentum = 1.0;
    EXPECT_THROW(b.validate(), ConfigError);
}

class GradientAttack : public ::testing::Test {
protected:
    void SetUp() override {
        ds = small_synthetic(6);
        surrogate = train(ds, TrainConfig{}, 6).params;
    }
    Dataset ds;
    GcnParams surrogate;
};

TEST_F(GradientAttack, ZeroIterationsEqualsHeuristic) {
    const auto b = budget_of(12, 4, 0);
    expect_same(fga_inject(ds, b, surrogate, 1), heuristic_inject(ds, b, 1));
}

TEST_F(GradientAttack, ConstraintsHoldAndLossNeverDrops) {
    for (bool momentum : {false, true}) {
        AttackLog log;
        const auto b = budget_of(12, 4, 10);
        const auto p = momentum ? mga_inject(ds, b, surrogate, 2, &log) : fga_inject(ds, b, surrogate, 2, &log);
        EXPECT_FALSE(verify_injection_constraints(p).has_value());
        ASSERT_GE(log.loss.size(), 2u);
        for (std::size_t k = 1; k < log.loss.size(); ++k) EXPECT_GE(log.loss[k], log.loss[k - 1]);
        EXPECT_NEAR(log.loss.back(), attack_loss(p, surrogate), 1e-12);
        for (NodeId i : p.injected_ids) EXPECT_LE(p.merged.graph.degree(i), b.inject_degree);
    }
}

TEST_F(GradientAttack, ZeroMomentumMatchesFga) {
    auto b = budget_of(12, 4, 6);
    b.momentum = 0.0;
    expect_same(mga_inject(ds, b, surrogate, 3), fga_inject(ds, b, surrogate, 3));
}

TEST_F(GradientAttack, Deterministic) {
    const auto b = budget_of(12, 4, 6);
    expect_same(fga_inject(ds, b, surrogate, 4), fga_inject(ds, b, surrogate, 4));
}

TEST_F(GradientAttack, SurrogateShapeMismatch) {
    const auto wrong = init_gcn_params(ds.num_features() + 1, 4, 3, 0);
    EXPECT_THROW(fga_inject(ds, budget_of(2, 2), wrong, 0), InputError);
}

TEST_F(GradientAttack, ExplicitBoundsRespected) {
    auto b = budget_of(10, 4, 8);
    b.feature_min = -0.25;
    b.feature_max = 0.75;
    const auto p = fga_inject(ds, b, surrogate, 5);
    for (NodeId i : p.injected_ids) {
        EXPECT_GE(p.merged.features.row(i).minCoeff(), -0.25);
        EXPECT_LE(p.merged.features.row(i).maxCoeff(), 0.75);
    }
}

TEST(GradientAttackRegression, SurrogateAccuracyDropsOnSyntheticCase) {
    SyntheticSpec s;
    s.num_classes = 3;
    s.nodes_per_class = 400;
    s.degree = 10;
    s.homophily = 0.8;
    s.feature_strength = 0.9;
    s.feature_noise = 0.5;
    const auto ds = generate_synthetic(s, 0);
    const auto surrogate = train(ds, TrainConfig{}, 0).params;
    AttackBudget b = budget_of(120, 10, 20);
    const auto fga = fga_inject(ds, b, surrogate, 0);
    const auto mga = mga_inject(ds, b, surrogate, 0);
    const double clean = test_acc(ds, surrogate);
    const double fga_drop = clean - test_acc(fga.merged, surrogate);
    const double mga_drop = clean - test_acc(mga.merged, surrogate);
    EXPECT_GE(fga_drop, 0.08);
    RecordProperty("fga_drop", std::to_string(fga_drop));
    RecordProperty("mga_drop", std::to_string(mga_drop));
}

TEST(Verify, OriginalEdgeAdditionIsNamed) {
    const auto ds = small_synthetic(7);
    auto p = heuristic_inject(ds, budget_of(3, 2), 7);
    NodeId u = 0, v = 1;
    while (ds.graph.has_edge(u, v)) ++v;
    std::vector<EdgePair> extra{{u, v}};
    p.merged.graph = p.merged.graph.extended(0, extra);
    const auto bad = verify_injection_constraints(p);
    ASSERT_TRUE(bad.has_value());
    EXPECT_EQ(bad->kind, InjectionViolation::Kind::OriginalEdge);
    EXPECT_NE(bad->message.find("(" + std::to_string(u) + ", " + std::to_string(v) + ")"), std::string::npos)
        << bad->message;
}

TEST(Verify, FeatureOutOfBoundsIsNamed) {
    const auto ds = small_synthetic(8);
    auto p = heuristic_inject(ds, budget_of(3, 2), 8);
    const NodeId i = p.injected_ids[1];
    p.merged.features(i, 2) = p.feature_hi[2] + 1.0;
    const auto bad = verify_injection_constraints(p);
    ASSERT_TRUE(bad.has_value());
    EXPECT_EQ(bad->kind, InjectionViolation::Kind::FeatureBound);
    EXPECT_NE(bad->message.find("node " + std::to_string(i)), std::string::npos);
    EXPECT_NE(bad->message.find("coordinate 2"), std::string::npos);
}

TEST(Verify, InjectedLabelAndMask) {
    const auto ds = small_synthetic(9);
    auto p = heuristic_inject(ds, budget_of(3, 2), 9);
    auto labeled = p;
    labeled.merged.labels[p.injected_ids[0]] = 0;
    ASSERT_TRUE(verify_injection_constraints(labeled).has_value());
    EXPECT_EQ(verify_injection_constraints(labeled)->kind, InjectionViolation::Kind::Label);
    auto masked = p;
    masked.merged.test_mask[p.injected_ids[0]] = true;
    EXPECT_EQ(verify_injection_constraints(masked)->kind, InjectionViolation::Kind::Mask);
}

TEST(PoisonedIo, RoundTrip) {
    const auto ds = small_synthetic(10);
    const auto surrogate = init_gcn_params(ds.num_features(), 4, 3, 1);
    const auto p = fga_inject(ds, budget_of(5, 3, 3), surrogate, 10);
    const auto dir = testing::scratch_dir("poisoned");
    save_poisoned(p, dir);
    const auto back = load_poisoned(dir);
    expect_same(back, p);
    EXPECT_EQ(back.base, p.base);
    EXPECT_EQ(back.feature_lo, p.feature_lo);
    EXPECT_EQ(back.feature_hi, p.feature_hi);
}

}  // namespace
}  // namespace chagnn
