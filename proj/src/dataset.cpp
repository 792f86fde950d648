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

#include "chagnn/dataset.hpp"

#include <string>

#include "chagnn/errors.hpp"

namespace chagnn {

std::vector<NodeId> mask_to_nodes(const std::vector<bool>& mask) {
    std::vector<NodeId> nodes;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) nodes.push_back(static_cast<NodeId>(i));
    }
    return nodes;
}

std::vector<NodeId> Dataset::train_nodes() const { return mask_to_nodes(train_mask); }
std::vector<NodeId> Dataset::val_nodes() const { return mask_to_nodes(val_mask); }
std::vector<NodeId> Dataset::test_nodes() const { return mask_to_nodes(test_mask); }

std::vector<NodeId> Dataset::labeled_nodes() const {
    std::vector<NodeId> nodes;
    for (std::size_t i = 0; i < num_nodes(); ++i) {
        if (train_mask[i] || val_mask[i]) nodes.push_back(static_cast<NodeId>(i));
    }
    return nodes;
}

void Dataset::validate() const {
    const std::size_t n = num_nodes();
    if (static_cast<std::size_t>(features.rows()) != n)
        throw InputError("dataset: feature rows (" + std::to_string(features.rows()) +
                         ") differ from node count (" + std::to_string(n) + ")");
    if (labels.size() != n) throw InputError("dataset: label count differs from node count");
    if (train_mask.size() != n || val_mask.size() != n || test_mask.size() != n)
        throw InputError("dataset: mask length differs from node count");
    if (num_classes < 1) throw InputError("dataset: num_classes must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        const int in_masks = int(train_mask[i]) + int(val_mask[i]) + int(test_mask[i]);
        if (in_masks > 1) throw InputError("dataset: node " + std::to_string(i) + " is in more than one split");
        if (labels[i] >= num_classes || labels[i] < kUnknownLabel)
            throw InputError("dataset: node " + std::to_string(i) + " has label outside [-1, C)");
        if ((train_mask[i] || val_mask[i]) && labels[i] < 0)
            throw InputError("dataset: labeled node " + std::to_string(i) + " has unknown label");
    }
}

bool Dataset::operator==(const Dataset& other) const {
    if (graph != other.graph || labels != other.labels || num_classes != other.num_classes ||
        train_mask != other.train_mask || val_mask != other.val_mask || test_mask != other.test_mask)
        return false;
    if (features.rows() != other.features.rows() || features.cols() != other.features.cols()) return false;
    return features == other.features;
}

Dataset largest_connected_component(const Dataset& ds) {
    const auto comp = connected_components(ds.graph);
    if (comp.empty()) return ds;

    std::vector<std::size_t> sizes;
    for (auto c : comp) {
        if (c >= sizes.size()) sizes.resize(c + 1, 0);
        ++sizes[c];
    }
    // Components are numbered by smallest member, so the first maximum wins ties.
    std::size_t best = 0;
    for (std::size_t c = 1; c < sizes.size(); ++c) {
        if (sizes[c] > sizes[best]) best = c;
    }
    if (sizes[best] == ds.num_nodes()) return ds;

    std::vector<NodeId> keep;
    keep.reserve(sizes[best]);
    for (std::size_t i = 0; i < comp.size(); ++i) {
        if (comp[i] == best) keep.push_back(static_cast<NodeId>(i));
    }

    Dataset out;
    out.graph = ds.graph.induced(keep);
    out.features.resize(static_cast<Eigen::Index>(keep.size()), ds.features.cols());
    out.num_classes = ds.num_classes;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const NodeId src = keep[i];
        out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(src);
        out.labels.push_back(ds.labels[src]);
        out.train_mask.push_back(ds.train_mask[src]);
        out.val_mask.push_back(ds.val_mask[src]);
        out.test_mask.push_back(ds.test_mask[src]);
    }
    return out;
}

}  // namespace chagnn
