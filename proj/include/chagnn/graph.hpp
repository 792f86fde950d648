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
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace chagnn {

using NodeId = std::uint32_t;
using EdgePair = std::pair<NodeId, NodeId>;

// Dense row-major real matrix used for features, activations and weights.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Undirected, unweighted graph stored as symmetric CSR.
//
// Every row is sorted and free of duplicates, and no self-loops are stored;
// self-loops only appear inside normalize_adjacency().
class SparseGraph {
public:
    SparseGraph() = default;

    std::size_t num_nodes() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
    // Number of undirected edges.
    std::size_t num_edges() const noexcept { return col_indices_.size() / 2; }

    std::size_t degree(NodeId u) const { return row_offsets_[u + 1] - row_offsets_[u]; }
    std::span<const NodeId> neighbors(NodeId u) const {
        return {col_indices_.data() + row_offsets_[u], degree(u)};
    }
    bool has_edge(NodeId u, NodeId v) const;

    const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<NodeId>& col_indices() const noexcept { return col_indices_; }

    // Each undirected edge once as (u, v) with u < v, lexicographically sorted.
    std::vector<EdgePair> edges() const;

    // Copy with the given undirected edges removed; pairs not present are ignored.
    SparseGraph without_edges(std::span<const EdgePair> removed) const;
    // Copy with extra vertices appended and the given edges added.
    SparseGraph extended(std::size_t extra_nodes, std::span<const EdgePair> added) const;
    // Subgraph induced by `keep`; node keep[i] becomes node i.
    SparseGraph induced(std::span<const NodeId> keep) const;

    // Structural check of the CSR invariants (symmetry, sorted rows, no duplicates or loops).
    bool is_valid() const;

    bool operator==(const SparseGraph&) const = default;

private:
    friend SparseGraph build_graph(std::span<const EdgePair> edges, std::size_t num_nodes);

    std::vector<std::size_t> row_offsets_{0};
    std::vector<NodeId> col_indices_;
};

// Symmetrizes, deduplicates and sorts `edges`; self-pairs are dropped.
// Throws InputError if an id is >= num_nodes.
SparseGraph build_graph(std::span<const EdgePair> edges, std::size_t num_nodes);

enum class Normalization {
    Symmetric,      // D^{-1/2} (A + I) D^{-1/2}
    RowStochastic,  // D^{-1} (A + I)
};

// (A + I) with per-entry weights; the diagonal is always present.
struct NormalizedAdjacency {
    std::size_t num_nodes = 0;
    std::vector<std::size_t> row_offsets{0};
    std::vector<NodeId> col_indices;
    std::vector<double> weights;

    double at(NodeId u, NodeId v) const;
    Matrix to_dense() const;
};

NormalizedAdjacency normalize_adjacency(const SparseGraph& g,
                                        Normalization mode = Normalization::Symmetric);

// Sparse-dense product. Each output row accumulates in ascending column order,
// so results are bit-reproducible. Throws InputError on a shape mismatch.
Matrix spmm(const NormalizedAdjacency& a, const Matrix& m);

// Fraction of undirected edges whose endpoints share a label. Edges touching a
// node with a negative (unknown) label are not counted at all.
// Throws UndefinedRatioError when no edge is countable.
double homophily_ratio(const SparseGraph& g, std::span<const int> labels);

// Component index per node; components are numbered in order of their smallest node id.
std::vector<std::size_t> connected_components(const SparseGraph& g);

}  // namespace chagnn
