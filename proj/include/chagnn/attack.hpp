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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chagnn/dataset.hpp"
#include "chagnn/gcn.hpp"

namespace chagnn {

struct AttackBudget {
    std::size_t num_inject = 0;
    std::size_t inject_degree = 10;  // edges per injected node
    // Explicit scalar feature bounds. When unset, each coordinate is bounded by
    // its min/max over the clean feature matrix.
    std::optional<double> feature_min;
    std::optional<double> feature_max;
    std::size_t opt_iters = 20;
    // Feature ascent step as a fraction of each coordinate's bound width.
    double step_size = 0.2;
    double momentum = 0.9;  // used by mga_inject only

    void validate() const;  // throws ConfigError
};

// Clean dataset plus an injected copy.
//
// Injected nodes take ids [N, N + N_I) in `merged`; they carry label -1 and sit
// in no split. The original block of the merged adjacency equals the base graph.
struct PoisonedDataset {
    Dataset base;
    std::vector<NodeId> injected_ids;
    Dataset merged;
    std::vector<NodeId> target_set;  // original test nodes adjacent to an injected node
    std::vector<double> feature_lo;  // resolved per-coordinate bounds
    std::vector<double> feature_hi;
};

// Attack-loss trajectory of a gradient attack: entry 0 is the heuristic start,
// then one entry per accepted optimization round.
struct AttackLog {
    std::vector<double> loss;
    std::size_t edges_flipped = 0;
};

// Wires each injected node to `inject_degree` distinct test nodes drawn
// uniformly, with features set to the clean mean clipped into bounds.
// Throws ConfigError if the budget is infeasible.
PoisonedDataset heuristic_inject(const Dataset& ds, const AttackBudget& budget, std::uint64_t seed);

// Starts from heuristic_inject and runs opt_iters rounds of gradient ascent on
// the surrogate's mean cross-entropy over the original test nodes. Per round
// and per injected node, the edge in the injected blocks with the largest
// beneficial linearized gain is flipped (a rewire when the node is at its
// degree budget), and injected features take one signed step clipped to bounds.
// A round whose true loss would drop is backtracked; if nothing helps the
// attack stops early.
PoisonedDataset fga_inject(const Dataset& ds, const AttackBudget& budget, const GcnParams& surrogate,
                           std::uint64_t seed, AttackLog* log = nullptr);

// Same loop as fga_inject with momentum-accumulated gradients
// g_t = momentum * g_{t-1} + grad_t driving edge selection and feature steps.
PoisonedDataset mga_inject(const Dataset& ds, const AttackBudget& budget, const GcnParams& surrogate,
                           std::uint64_t seed, AttackLog* log = nullptr);

// Surrogate mean cross-entropy over the original test nodes of `p.merged`.
double attack_loss(const PoisonedDataset& p, const GcnParams& surrogate);

struct InjectionViolation {
    enum class Kind { Shape, OriginalEdge, OriginalNode, FeatureBound, Label, Mask } kind;
    std::string message;
};

// Checks every PoisonedDataset invariant; returns the first violation found.
std::optional<InjectionViolation> verify_injection_constraints(const PoisonedDataset& p);

// Dataset directory format for `merged` plus injected.json:
// {"injected_ids": [...], "targets": [...], "feature_min": [...], "feature_max": [...]}
void save_poisoned(const PoisonedDataset& p, const std::filesystem::path& dir);
PoisonedDataset load_poisoned(const std::filesystem::path& dir);

}  // namespace chagnn
