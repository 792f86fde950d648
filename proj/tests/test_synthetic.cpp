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
#include <map>

#include "chagnn/errors.hpp"
#include "chagnn/synthetic.hpp"

namespace chagnn {
namespace {

SyntheticSpec spec_of(GraphModel model, int c, std::size_t per_class, std::size_t d, double h, double p = 0.9) {
    SyntheticSpec s;
    s.model = model;
    s.num_classes = c;
    s.nodes_per_class = per_class;
    s.degree = d;
    s.homophily = h;
    s.feature_strength = p;
    return s;
}

class BothModels : public ::testing::TestWithParam<GraphModel> {};

TEST_P(BothModels, OneHotFeaturesAtFullStrength) {
    const auto ds = generate_synthetic(spec_of(GetParam(), 2, 50, 4, 0.75, 1.0), 1);
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        EXPECT_EQ(ds.features.row(row).sum(), 1.0);
        EXPECT_EQ(ds.features(row, ds.labels[i]), 1.0);
    }
}

TEST_P(BothModels, FeatureTemplate) {
    const auto ds = generate_synthetic(spec_of(GetParam(), 3, 30, 6, 2.0 / 3.0, 0.9), 2);
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        for (int j = 0; j < 3; ++j) {
            const double expect = (j == ds.labels[i] ? 0.9 : 0.0) + 0.1 / 3.0;
            EXPECT_DOUBLE_EQ(ds.features(static_cast<Eigen::Index>(i), j), expect);
        }
    }
}

TEST_P(BothModels, PerfectHomophily) {
    const auto ds = generate_synthetic(spec_of(GetParam(), 3, 60, 6, 1.0), 3);
    EXPECT_GT(ds.graph.num_edges(), 0u);
    EXPECT_EQ(homophily_ratio(ds.graph, ds.labels), 1.0);
}

TEST_P(BothModels, MeasuredHomophilyNearTarget) {
    const auto ds = generate_synthetic(spec_of(GetParam(), 3, 300, 9, 2.0 / 3.0), 4);
    EXPECT_NEAR(homophily_ratio(ds.graph, ds.labels), 2.0 / 3.0, 0.03);
}

TEST_P(BothModels, DeterministicInSeed) {
    const auto s = spec_of(GetParam(), 3, 40, 6, 2.0 / 3.0);
    EXPECT_EQ(generate_synthetic(s, 9), generate_synthetic(s, 9));
    EXPECT_FALSE(generate_synthetic(s, 9) == generate_synthetic(s, 10));
}

TEST_P(BothModels, StratifiedSplit) {
    const auto ds = generate_synthetic(spec_of(GetParam(), 3, 100, 6, 2.0 / 3.0), 5);
    ds.validate();
    std::map<int, std::array<int, 3>> per_class;
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        const int split = ds.train_mask[i] ? 0 : ds.val_mask[i] ? 1 : 2;
        ASSERT_TRUE(ds.train_mask[i] || ds.val_mask[i] || ds.test_mask[i]);
        per_class[ds.labels[i]][static_cast<std::size_t>(split)]++;
    }
    for (const auto& [cls, counts] : per_class) {
        EXPECT_EQ(counts[0], 10) << "class " << cls;
        EXPECT_EQ(counts[1], 10) << "class " << cls;
        EXPECT_EQ(counts[2], 80) << "class " << cls;
    }
}

INSTANTIATE_TEST_SUITE_P(Models, BothModels, ::testing::Values(GraphModel::DRegular, GraphModel::Csbm));

TEST(DRegular, ExactDegreeAndClassMix) {
    const auto ds = generate_synthetic(spec_of(GraphModel::DRegular, 3, 100, 6, 2.0 / 3.0), 6);
    ASSERT_TRUE(ds.graph.is_valid());
    std::size_t exact = 0;
    for (NodeId u = 0; u < ds.num_nodes(); ++u) {
        EXPECT_LE(ds.graph.degree(u), 6u);
        EXPECT_GE(ds.graph.degree(u) + 1, 6u);
        exact += ds.graph.degree(u) == 6;
    }
    // Repairs leave at most a handful of nodes one edge short.
    EXPECT_GE(exact, ds.num_nodes() - 6);
}

TEST(DRegular, LabelsCycleThroughClasses) {
    const auto ds = generate_synthetic(spec_of(GraphModel::DRegular, 4, 6, 4, 0.25), 0);
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) EXPECT_EQ(ds.labels[i], static_cast<int>(i % 4));
}

TEST(DRegular, NonIntegralStubCountIsInfeasible) {
    EXPECT_THROW(generate_synthetic(spec_of(GraphModel::DRegular, 3, 50, 10, 0.75), 0), ConfigError);
}

TEST(DRegular, UnevenHeteroStubsAreInfeasible) {
    // One cross-class stub per class cannot be shared evenly by two other classes.
    EXPECT_THROW(generate_synthetic(spec_of(GraphModel::DRegular, 3, 1, 1, 0.0), 0), ConfigError);
}

TEST(Csbm, MeanDegreeNearTarget) {
    const auto ds = generate_synthetic(spec_of(GraphModel::Csbm, 3, 400, 10, 0.8), 7);
    const double mean = 2.0 * static_cast<double>(ds.graph.num_edges()) / static_cast<double>(ds.num_nodes());
    EXPECT_NEAR(mean, 10.0, 0.5);
    EXPECT_NEAR(homophily_ratio(ds.graph, ds.labels), 0.8, 0.03);
}

TEST(Csbm, FeatureNoiseHasRequestedSpread) {
    auto s = spec_of(GraphModel::Csbm, 3, 400, 10, 0.8);
    s.feature_noise = 0.5;
    const auto ds = generate_synthetic(s, 8);
    double sum = 0, sq = 0;
    const auto n = static_cast<double>(ds.features.size());
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        for (int j = 0; j < 3; ++j) {
            const double resid = ds.features(static_cast<Eigen::Index>(i), j) -
                                 ((j == ds.labels[i] ? 0.9 : 0.0) + 0.1 / 3.0);
            sum += resid;
            sq += resid * resid;
        }
    }
    EXPECT_NEAR(sum / n, 0.0, 0.03);
    EXPECT_NEAR(std::sqrt(sq / n), 0.5, 0.03);
}

}  // namespace
}  // namespace chagnn
