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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "chagnn/dataset.hpp"
#include "chagnn/graph.hpp"

namespace chagnn {

// Idealized d-regular neighbourhood around one target node. The d slots of the
// target's closed neighbourhood (self included) hold `same_class_edges` nodes
// of its class and `other_class_edges` nodes of one competing class; the
// attacker adds `injected_edges` extra neighbours.
struct TheoremScenario {
    std::size_t num_classes = 2;
    std::size_t degree = 4;
    std::size_t same_class_edges = 3;
    std::size_t other_class_edges = 1;
    std::size_t injected_edges = 2;
    double feature_strength = 1.0;
    double weight_scale = 1.0;

    // Throws DegenerateScenarioError when a == b, InputError for any other
    // broken invariant (a + b != d, a < b, l == 0, C < 2, bad p or r).
    void validate() const;
    nlohmann::json to_json() const;
};

// Margin bookkeeping for the clean graph (L0), homophilous injection (L1) and
// heterophilous injection (L2). Losses are in feature units, i.e. logits
// divided by the weight scale times C.
struct CmLossReport {
    double x0 = 0, x1 = 0;
    double s0 = 0, s1 = 0, t0 = 0, t1 = 0, f0 = 0, f1 = 0;
    double L0 = 0, L1 = 0, L2 = 0;
    double ratio_measured = 0;
    double ratio_closed_form = 0;
    double ratio_ba = 0;
};

struct BoundReport {
    double accuracy = 0;
    double p1_est = 0;
    double p2_est = 0;
    double p1_analytic = 0;
    double ratio_est = 0;
    double ratio_upper = 0;  // ratio at the one-sided 99% upper bound of p1
    double bound = 0;        // 2p(1-p)
    double tight_bound = 0;  // 2p(1-p) b / (b + l)
    double conditional_ratio = 0;  // P(homophilous | flagged) / P(heterophilous | flagged) * b/a
    std::size_t samples = 0;
    bool pass = false;
};

// r((C I - J) + 1/C). Throws InputError for C < 2 or r == 0.
Matrix optimal_weights(std::size_t num_classes, double weight_scale);

CmLossReport closed_form_losses(const TheoremScenario& sc);

enum class Injection { None, Homophilous, Heterophilous };

// Depth-two tree around the target: every node within one hop has a closed
// neighbourhood of exactly d nodes with the class mix of the scenario, so the
// row-normalized two-hop aggregate equals the proportion algebra. Node ids are
// shuffled by `seed`; labels are the true classes.
struct ScenarioGraph {
    Dataset data;
    NodeId target = 0;
    int target_class = 0;
    int competing_class = 1;
};
ScenarioGraph build_scenario_graph(const TheoremScenario& sc, Injection kind, std::uint64_t seed);

// Margins measured on the three concrete graphs via Â² X W* with
// row-normalized (A + I). Throws ConfigError when a < 2 (no tree fits).
CmLossReport simulate_losses(const TheoremScenario& sc, std::uint64_t seed);

struct Theorem1Result {
    TheoremScenario scenario;
    CmLossReport report;
    bool degenerate = false;  // a == b: skipped, counts as a pass
    double delta_closed = 0;
    double delta_ba = 0;
    bool pass = false;
};

inline constexpr double kTheorem1Tolerance = 1e-8;

Theorem1Result theorem1_check(const TheoremScenario& sc, std::uint64_t seed,
                              double tolerance = kTheorem1Tolerance);

struct Theorem1Grid {
    std::vector<std::size_t> classes{2, 3, 5};
    std::vector<std::size_t> same{2, 3, 4, 5, 6};
    std::vector<std::size_t> injected{1, 2, 4};
    double feature_strength = 1.0;
    double weight_scale = 1.0;
    bool degenerate_only = false;  // only a == b points
};
std::vector<Theorem1Result> theorem1_grid(const Theorem1Grid& grid, std::uint64_t seed,
                                          double tolerance = kTheorem1Tolerance);

// Monte Carlo over scenario edges: each sampled edge is homophilous with
// probability a / (d + l); both endpoint pseudo-labels are right with
// probability p, otherwise uniform over the other classes. Throws InputError
// unless 0.5 < p < 1 and samples >= 10^4.
BoundReport theorem2_check(const TheoremScenario& sc, double accuracy, std::size_t samples, std::uint64_t seed);

nlohmann::json theorem_report_json(const std::vector<Theorem1Result>& grid, const std::vector<BoundReport>& bounds);

}  // namespace chagnn
