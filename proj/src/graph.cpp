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

#include "chagnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "chagnn/errors.hpp"

namespace chagnn {

bool SparseGraph::has_edge(NodeId u, NodeId v) const {
    if (u >= num_nodes() || v >= num_nodes()) return false;
    auto nbrs = neighbors(u);
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

std::vector<EdgePair> SparseGraph::edges() const {
    std::vector<EdgePair> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < num_nodes(); ++u) {
        for (NodeId v : neighbors(u)) {
            if (u < v) out.emplace_back(u, v);
        }
    }
    return out;
}

SparseGraph SparseGraph::without_edges(std::span<const EdgePair> removed) const {
    std::vector<EdgePair> drop;
    drop.reserve(removed.size());
    for (auto [u, v] : removed) drop.emplace_back(std::min(u, v), std::max(u, v));
    std::sort(drop.begin(), drop.end());

    std::vector<EdgePair> keep;
    keep.reserve(num_edges());
    for (const auto& e : edges()) {
        if (!std::binary_search(drop.begin(), drop.end(), e)) keep.push_back(e);
    }
    return build_graph(keep, num_nodes());
}

SparseGraph SparseGraph::extended(std::size_t extra_nodes, std::span<const EdgePair> added) const {
    std::vector<EdgePair> all = edges();
    all.insert(all.end(), added.begin(), added.end());
    return build_graph(all, num_nodes() + extra_nodes);
}

SparseGraph SparseGraph::induced(std::span<const NodeId> keep) const {
    constexpr NodeId kAbsent = static_cast<NodeId>(-1);
    std::vector<NodeId> remap(num_nodes(), kAbsent);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] >= num_nodes()) throw InputError("induced: node id out of range");
        remap[keep[i]] = static_cast<NodeId>(i);
    }
    std::vector<EdgePair> sub;
    for (const auto& [u, v] : edges()) {
        if (remap[u] != kAbsent && remap[v] != kAbsent) sub.emplace_back(remap[u], remap[v]);
    }
    return build_graph(sub, keep.size());
}

bool SparseGraph::is_valid() const {
    const std::size_t n = num_nodes();
    if (row_offsets_.empty() || row_offsets_.front() != 0 || row_offsets_.back() != col_indices_.size())
        return false;
    for (NodeId u = 0; u < n; ++u) {
        if (row_offsets_[u] > row_offsets_[u + 1]) return false;
        auto nbrs = neighbors(u);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            if (nbrs[k] >= n || nbrs[k] == u) return false;
            if (k > 0 && nbrs[k - 1] >= nbrs[k]) return false;
            if (!has_edge(nbrs[k], u)) return false;
        }
    }
    return true;
}

SparseGraph build_graph(std::span<const EdgePair> edges, std::size_t num_nodes) {
    std::vector<EdgePair> directed;
    directed.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
        if (u >= num_nodes || v >= num_nodes) {
            throw InputError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                             ") references a node >= " + std::to_string(num_nodes));
        }
        if (u == v) continue;
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    SparseGraph g;
    g.row_offsets_.assign(num_nodes + 1, 0);
    g.col_indices_.reserve(directed.size());
    for (const auto& [u, v] : directed) {
        ++g.row_offsets_[u + 1];
        g.col_indices_.push_back(v);
    }
    for (std::size_t i = 0; i < num_nodes; ++i) g.row_offsets_[i + 1] += g.row_offsets_[i];
    return g;
}

// =============================================================================
// Normalized adjacency
// =============================================================================

double NormalizedAdjacency::at(NodeId u, NodeId v) const {
    auto first = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[u]);
    auto last = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[u + 1]);
    auto it = std::lower_bound(first, last, v);
    if (it == last || *it != v) return 0.0;
    return weights[static_cast<std::size_t>(it - col_indices.begin())];
}

Matrix NormalizedAdjacency::to_dense() const {
    const auto n = static_cast<Eigen::Index>(num_nodes);
    Matrix dense = Matrix::Zero(n, n);
    for (std::size_t u = 0; u < num_nodes; ++u) {
        for (std::size_t k = row_offsets[u]; k < row_offsets[u + 1]; ++k) {
            dense(static_cast<Eigen::Index>(u), col_indices[k]) = weights[k];
        }
    }
    return dense;
}

NormalizedAdjacency normalize_adjacency(const SparseGraph& g, Normalization mode) {
    const std::size_t n = g.num_nodes();
    NormalizedAdjacency a;
    a.num_nodes = n;
    a.row_offsets.assign(n + 1, 0);
    a.col_indices.reserve(g.col_indices().size() + n);
    a.weights.reserve(g.col_indices().size() + n);

    for (NodeId u = 0; u < n; ++u) {
        const double deg_u = static_cast<double>(g.degree(u) + 1);
        // One sqrt of the product keeps e.g. the two-node case at exactly 0.5.
        auto weight = [&](NodeId v) {
            return mode == Normalization::Symmetric ? 1.0 / std::sqrt(deg_u * static_cast<double>(g.degree(v) + 1))
                                                    : 1.0 / deg_u;
        };
        bool diagonal_done = false;
        for (NodeId v : g.neighbors(u)) {
            if (!diagonal_done && u < v) {
                a.col_indices.push_back(u);
                a.weights.push_back(weight(u));
                diagonal_done = true;
            }
            a.col_indices.push_back(v);
            a.weights.push_back(weight(v));
        }
        if (!diagonal_done) {
            a.col_indices.push_back(u);
            a.weights.push_back(weight(u));
        }
        a.row_offsets[u + 1] = a.col_indices.size();
    }
    return a;
}

Matrix spmm(const NormalizedAdjacency& a, const Matrix& m) {
    if (static_cast<std::size_t>(m.rows()) != a.num_nodes) {
        throw InputError("spmm: adjacency has " + std::to_string(a.num_nodes) + " columns but matrix has " +
                         std::to_string(m.rows()) + " rows");
    }
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (std::size_t u = 0; u < a.num_nodes; ++u) {
        auto row = out.row(static_cast<Eigen::Index>(u));
        for (std::size_t k = a.row_offsets[u]; k < a.row_offsets[u + 1]; ++k) {
            row.noalias() += a.weights[k] * m.row(a.col_indices[k]);
        }
    }
    return out;
}

// =============================================================================
// Graph statistics
// =============================================================================

double homophily_ratio(const SparseGraph& g, std::span<const int> labels) {
    if (labels.size() < g.num_nodes()) throw InputError("homophily_ratio: fewer labels than nodes");
    std::size_t counted = 0;
    std::size_t same = 0;
    for (const auto& [u, v] : g.edges()) {
        if (labels[u] < 0 || labels[v] < 0) continue;
        ++counted;
        if (labels[u] == labels[v]) ++same;
    }
    if (counted == 0) throw UndefinedRatioError("homophily_ratio: graph has no edge between labeled nodes");
    return static_cast<double>(same) / static_cast<double>(counted);
}

std::vector<std::size_t> connected_components(const SparseGraph& g) {
    constexpr auto kUnseen = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(g.num_nodes(), kUnseen);
    std::size_t next = 0;
    std::queue<NodeId> frontier;
    for (NodeId s = 0; s < g.num_nodes(); ++s) {
        if (comp[s] != kUnseen) continue;
        comp[s] = next;
        frontier.push(s);
        while (!frontier.empty()) {
            NodeId u = frontier.front();
            frontier.pop();
            for (NodeId v : g.neighbors(u)) {
                if (comp[v] == kUnseen) {
                    comp[v] = next;
                    frontier.push(v);
                }
            }
        }
        ++next;
    }
    return comp;
}

}  // namespace chagnn
