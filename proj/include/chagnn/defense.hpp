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
#include <span>
#include <string>
#include <vector>

#include "chagnn/attack.hpp"
#include "chagnn/dataset.hpp"
#include "chagnn/gcn.hpp"

namespace chagnn {

struct DefenseConfig {
    double elimination_rate = 0.10;  // q: share of flagged edges removed per iteration
    std::size_t max_iter = 5;

    void validate() const;  // throws ConfigError
};

// Flagged edges (u < v) with their heterophily degree (JS divergence of the
// endpoint soft labels), aligned by index.
struct HeterophilousEdgeSet {
    std::vector<EdgePair> edges;
    std::vector<double> scores;

    std::size_t size() const noexcept { return edges.size(); }
};

struct SamplingDistribution {
    std::vector<double> probs;  // aligned with HeterophilousEdgeSet::edges
};

// Unlabeled region eligible for cleaning: test nodes plus nodes that belong to
// no split (which covers injected nodes).
std::vector<NodeId> modified_node_set(const Dataset& ds);
// Test nodes of the merged graph plus the injected ids.
std::vector<NodeId> modified_node_set(const PoisonedDataset& p);

// For every u in `modified` and neighbour v, flags {u, v} when v is labeled and
// y_v != pseudo_u, or v is unlabeled and pseudo_v != pseudo_u. Returned pairs
// are unique, stored as (min, max) and sorted.
std::vector<EdgePair> identify_heterophilous(const SparseGraph& g, std::span<const NodeId> modified,
                                             std::span<const NodeId> labeled, std::span<const int> true_labels,
                                             std::span<const int> pseudo);

// Jensen-Shannon divergence with base-2 logarithms (range [0, 1]), 0·log 0 = 0.
// Throws InputError unless both inputs are non-negative and sum to 1 within 1e-6.
double js_divergence(std::span<const double> p, std::span<const double> q);

HeterophilousEdgeSet score_edges(std::vector<EdgePair> edges, const SoftLabelMatrix& soft);

// Softmax over the scores. Throws InputError on an empty list.
SamplingDistribution sampling_probs(std::span<const double> scores);

struct EliminationResult {
    SparseGraph graph;
    std::vector<EdgePair> removed;  // in draw order
};

// Draws floor(q * |H_e|) distinct edges one at a time, proportional to `dist`
// among the edges not yet drawn, and removes them from both directions.
EliminationResult eliminate_edges(const SparseGraph& g, const HeterophilousEdgeSet& he,
                                  const SamplingDistribution& dist, double q, std::uint64_t seed);

struct IterationRecord {
    std::size_t iter = 0;
    std::size_t removed = 0;
    std::size_t he_size = 0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    double homophily = 0.0;  // NaN when the graph has no countable edge
};

struct ChagnnResult {
    GcnParams params;
    Dataset cleaned;
    std::vector<IterationRecord> history;
    double pretrain_val_acc = 0.0;
    double pretrain_test_acc = 0.0;
};

// Pretrain on the input graph, then max_iter rounds of: soft labels and
// pseudo-labels on the current graph, flag heterophilous edges around
// `modified`, score them, sample and remove floor(q * |H_e|), fine-tune.
ChagnnResult chagnn_run(const Dataset& ds, std::span<const NodeId> modified, const DefenseConfig& cfg,
                        const TrainConfig& tcfg, std::uint64_t seed);
ChagnnResult chagnn_run(const Dataset& ds, const DefenseConfig& cfg, const TrainConfig& tcfg, std::uint64_t seed);
ChagnnResult chagnn_run(const PoisonedDataset& p, const DefenseConfig& cfg, const TrainConfig& tcfg,
                        std::uint64_t seed);

// One JSON object per line: {"iter","removed","he_size","val_acc","test_acc","homophily"}.
std::string history_jsonl(std::span<const IterationRecord> history);

// Removes every flagged edge at once, without scoring or sampling.
Dataset baseline_adaedge(const Dataset& ds, std::span<const NodeId> modified, std::span<const int> pseudo);
Dataset baseline_adaedge(const Dataset& ds, std::span<const int> pseudo);

// Jaccard similarity of the endpoint feature supports (feature > 0 counts as present).
// Two empty supports have similarity 1.
double jaccard_similarity(const Matrix& features, NodeId u, NodeId v);
// Removes every edge whose endpoint similarity is below `threshold`.
Dataset baseline_jaccard(const Dataset& ds, double threshold);

}  // namespace chagnn
