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

#include "chagnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "chagnn/errors.hpp"

namespace chagnn {

namespace {

constexpr int kMatchAttempts = 100;

std::uint64_t edge_key(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

// Pairs left[i] with right[i]. Self-pairs and repeated pairs are repaired by
// degree-preserving endpoint swaps with randomly chosen partner pairs. Returns
// the number of pairs that are still invalid afterwards.
std::size_t repair_pairs(std::vector<EdgePair>& pairs, std::mt19937_64& rng) {
    std::unordered_map<std::uint64_t, int> count;
    count.reserve(pairs.size() * 2);
    for (auto [u, v] : pairs) ++count[edge_key(u, v)];
    auto is_bad = [&](const EdgePair& e) { return e.first == e.second || count[edge_key(e.first, e.second)] > 1; };

    if (pairs.size() < 2) return pairs.empty() || !is_bad(pairs[0]) ? 0 : 1;
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    const std::size_t budget = 50 * pairs.size() + 100;
    for (std::size_t tries = 0; tries < budget; ++tries) {
        std::size_t bad = pairs.size();
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (is_bad(pairs[i])) {
                bad = i;
                break;
            }
        }
        if (bad == pairs.size()) return 0;
        // Inner loop: try random partners for this bad pair.
        for (int k = 0; k < 64; ++k, ++tries) {
            const std::size_t j = pick(rng);
            if (j == bad) continue;
            auto [u, v] = pairs[bad];
            auto [x, y] = pairs[j];
            const EdgePair a{u, y}, b{x, v};
            if (a.first == a.second || b.first == b.second) continue;
            const auto ka = edge_key(a.first, a.second), kb = edge_key(b.first, b.second);
            if (ka == kb || count[ka] > 0 || count[kb] > 0) continue;
            --count[edge_key(u, v)];
            --count[edge_key(x, y)];
            ++count[ka];
            ++count[kb];
            pairs[bad] = a;
            pairs[j] = b;
            break;
        }
    }
    std::size_t remaining = 0;
    for (const auto& e : pairs) remaining += is_bad(e) ? 1 : 0;
    return remaining;
}

// Random matching between two stub lists of equal length (the same list twice
// for a within-class block). Falls back to dropping invalid pairs, which lowers
// the affected degrees by one.
std::vector<EdgePair> match_stubs(const std::vector<NodeId>& left_stubs, const std::vector<NodeId>& right_stubs,
                                  bool same_block, std::mt19937_64& rng) {
    std::vector<EdgePair> pairs;
    for (int attempt = 0; attempt < kMatchAttempts; ++attempt) {
        pairs.clear();
        if (same_block) {
            std::vector<NodeId> stubs = left_stubs;
            std::shuffle(stubs.begin(), stubs.end(), rng);
            for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) pairs.emplace_back(stubs[i], stubs[i + 1]);
        } else {
            std::vector<NodeId> right = right_stubs;
            std::shuffle(right.begin(), right.end(), rng);
            for (std::size_t i = 0; i < left_stubs.size(); ++i) pairs.emplace_back(left_stubs[i], right[i]);
        }
        if (repair_pairs(pairs, rng) == 0) return pairs;
    }
    std::unordered_map<std::uint64_t, int> seen;
    std::vector<EdgePair> kept;
    for (auto [u, v] : pairs) {
        if (u == v) continue;
        if (seen[edge_key(u, v)]++ > 0) continue;
        kept.emplace_back(u, v);
    }
    return kept;
}

std::vector<EdgePair> d_regular_edges(const SyntheticSpec& spec, std::mt19937_64& rng) {
    const auto c_count = static_cast<std::size_t>(spec.num_classes);
    const std::size_t n = spec.nodes_per_class;
    const double same_real = static_cast<double>(spec.degree) * spec.homophily;
    const auto same = static_cast<std::size_t>(std::llround(same_real));
    if (std::abs(same_real - static_cast<double>(same)) > 1e-9 * std::max<double>(1.0, spec.degree))
        throw ConfigError("d-regular: degree * homophily = " + std::to_string(same_real) + " is not an integer");
    const std::size_t hetero = spec.degree - same;
    if (same > 0 && same >= n) throw ConfigError("d-regular: class too small for the same-class degree");
    if ((n * same) % 2 != 0) throw ConfigError("d-regular: odd number of same-class stubs in a class");
    if (hetero > 0) {
        if (c_count < 2) throw ConfigError("d-regular: heterophilous stubs need at least two classes");
        if ((n * hetero) % (c_count - 1) != 0)
            throw ConfigError("d-regular: cross-class stubs do not divide evenly over the other classes");
        if ((n * hetero) / (c_count - 1) > n * n)
            throw ConfigError("d-regular: cross-class degree exceeds the class size");
    }

    auto node_of = [&](std::size_t cls, std::size_t k) { return static_cast<NodeId>(k * c_count + cls); };

    // stubs[c][c2]: endpoints in class c reserved for edges towards class c2.
    std::vector<std::vector<std::vector<NodeId>>> stubs(c_count, std::vector<std::vector<NodeId>>(c_count));
    for (std::size_t c = 0; c < c_count; ++c) {
        std::vector<std::size_t> others;
        for (std::size_t o = 0; o < c_count; ++o) {
            if (o != c) others.push_back(o);
        }
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t s = 0; s < same; ++s) stubs[c][c].push_back(node_of(c, k));
            for (std::size_t s = 0; s < hetero; ++s) {
                const std::size_t g = k * hetero + s;
                stubs[c][others[g % others.size()]].push_back(node_of(c, k));
            }
        }
    }

    std::vector<EdgePair> edges;
    for (std::size_t c = 0; c < c_count; ++c) {
        for (std::size_t c2 = c; c2 < c_count; ++c2) {
            if (stubs[c][c2].empty()) continue;
            auto block = match_stubs(stubs[c][c2], stubs[c2][c], c == c2, rng);
            edges.insert(edges.end(), block.begin(), block.end());
        }
    }
    return edges;
}

std::vector<EdgePair> csbm_edges(const SyntheticSpec& spec, std::mt19937_64& rng) {
    const auto c_count = static_cast<std::size_t>(spec.num_classes);
    const std::size_t n = spec.nodes_per_class;
    const auto d = static_cast<double>(spec.degree);
    const double p_in = n > 1 ? d * spec.homophily / static_cast<double>(n - 1) : 0.0;
    const double p_out =
        c_count > 1 ? d * (1.0 - spec.homophily) / (static_cast<double>(c_count - 1) * static_cast<double>(n)) : 0.0;
    if (p_in > 1.0 || p_out > 1.0) throw ConfigError("csbm: degree too large for the class size");
    if (c_count == 1 && spec.homophily < 1.0) throw ConfigError("csbm: a single class cannot be heterophilous");

    const std::size_t total = n * c_count;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<EdgePair> edges;
    for (std::size_t u = 0; u < total; ++u) {
        for (std::size_t v = u + 1; v < total; ++v) {
            const double p = (u % c_count == v % c_count) ? p_in : p_out;
            if (unit(rng) < p) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }
    return edges;
}

}  // namespace

void assign_stratified_split(Dataset& ds, double train_frac, double val_frac, std::mt19937_64& rng) {
    const std::size_t n = ds.labels.size();
    ds.train_mask.assign(n, false);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    for (int c = 0; c < ds.num_classes; ++c) {
        std::vector<NodeId> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (ds.labels[i] == c) members.push_back(static_cast<NodeId>(i));
        }
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(members.size())));
        const auto n_val = std::min(members.size() - n_train,
                                    static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(members.size()))));
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (k < n_train)
                ds.train_mask[members[k]] = true;
            else if (k < n_train + n_val)
                ds.val_mask[members[k]] = true;
            else
                ds.test_mask[members[k]] = true;
        }
    }
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.num_classes < 1) throw ConfigError("synthetic: num_classes must be >= 1");
    if (spec.nodes_per_class < 1) throw ConfigError("synthetic: nodes_per_class must be >= 1");
    if (!(spec.homophily >= 0.0 && spec.homophily <= 1.0)) throw ConfigError("synthetic: homophily outside [0, 1]");
    if (!(spec.feature_strength >= 0.0 && spec.feature_strength <= 1.0))
        throw ConfigError("synthetic: feature_strength outside [0, 1]");
    if (!(spec.feature_noise >= 0.0)) throw ConfigError("synthetic: feature_noise must be >= 0");

    std::mt19937_64 rng(seed);
    const auto c_count = static_cast<std::size_t>(spec.num_classes);
    const std::size_t total = spec.nodes_per_class * c_count;

    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.labels.resize(total);
    for (std::size_t i = 0; i < total; ++i) ds.labels[i] = static_cast<int>(i % c_count);

    const auto edges = spec.model == GraphModel::DRegular ? d_regular_edges(spec, rng) : csbm_edges(spec, rng);
    ds.graph = build_graph(edges, total);

    const double base = (1.0 - spec.feature_strength) / static_cast<double>(c_count);
    ds.features = Matrix::Constant(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(c_count), base);
    for (std::size_t i = 0; i < total; ++i) {
        ds.features(static_cast<Eigen::Index>(i), ds.labels[i]) += spec.feature_strength;
    }
    if (spec.feature_noise > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.feature_noise);
        for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
            for (Eigen::Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) += noise(rng);
        }
    }

    assign_stratified_split(ds, 0.1, 0.1, rng);
    return ds;
}

}  // namespace chagnn
