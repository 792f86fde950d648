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
#include <filesystem>
#include <vector>

#include "chagnn/graph.hpp"

namespace chagnn {

inline constexpr int kUnknownLabel = -1;

// Graph, node features and the semi-supervised split.
//
// Train/val nodes form the labeled set; test nodes are the unlabeled nodes
// whose accuracy is reported. Nodes outside every mask (e.g. injected nodes)
// are never evaluated.
struct Dataset {
    SparseGraph graph;
    Matrix features;
    std::vector<int> labels;  // kUnknownLabel where no ground truth exists
    int num_classes = 0;
    std::vector<bool> train_mask;
    std::vector<bool> val_mask;
    std::vector<bool> test_mask;

    std::size_t num_nodes() const noexcept { return graph.num_nodes(); }
    std::size_t num_features() const noexcept { return static_cast<std::size_t>(features.cols()); }

    std::vector<NodeId> train_nodes() const;
    std::vector<NodeId> val_nodes() const;
    std::vector<NodeId> test_nodes() const;
    // Nodes whose true labels the defender knows (train and validation).
    std::vector<NodeId> labeled_nodes() const;

    // Throws InputError if sizes disagree, masks overlap, or a train/val label
    // falls outside [0, num_classes).
    void validate() const;

    bool operator==(const Dataset& other) const;
};

std::vector<NodeId> mask_to_nodes(const std::vector<bool>& mask);

// Induced sub-dataset on the largest connected component, reindexed densely in
// ascending original id. Ties go to the component holding the smallest id.
Dataset largest_connected_component(const Dataset& ds);

// Text directory format:
//   edges.tsv      "u\tv" per line, 0-based, either orientation
//   features.csv   row i: D comma-separated reals
//   labels.csv     row i: integer label or -1
//   meta.json      {"num_nodes": N, "num_features": D, "num_classes": C}
//   splits.json    {"train": [...], "val": [...], "test": [...]}
// Reals are written in shortest round-trip form, so save/load is exact.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

}  // namespace chagnn
