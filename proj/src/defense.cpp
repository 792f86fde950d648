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

#include "chagnn/defense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "chagnn/errors.hpp"

namespace chagnn {

void DefenseConfig::validate() const {
    if (!(elimination_rate >= 0.0 && elimination_rate <= 1.0))
        throw ConfigError("defense: elimination_rate must lie in [0, 1]");
    if (max_iter < 1) throw ConfigError("defense: max_iter must be >= 1");
}

std::vector<NodeId> modified_node_set(const Dataset& ds) {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        if (ds.test_mask[i] || (!ds.train_mask[i] && !ds.val_mask[i])) out.push_back(static_cast<NodeId>(i));
    }
    return out;
}

std::vector<NodeId> modified_node_set(const PoisonedDataset& p) {
    std::vector<NodeId> out = p.merged.test_nodes();
    out.insert(out.end(), p.injected_ids.begin(), p.injected_ids.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<EdgePair> identify_heterophilous(const SparseGraph& g, std::span<const NodeId> modified,
                                             std::span<const NodeId> labeled, std::span<const int> true_labels,
                                             std::span<const int> pseudo) {
    std::vector<bool> is_labeled(g.num_nodes(), false);
    for (NodeId v : labeled) is_labeled[v] = true;

    std::vector<EdgePair> flagged;
    for (NodeId u : modified) {
        for (NodeId v : g.neighbors(u)) {
            const bool conflict = is_labeled[v] ? true_labels[v] != pseudo[u] : pseudo[v] != pseudo[u];
            if (conflict) flagged.emplace_back(std::min(u, v), std::max(u, v));
        }
    }
    std::sort(flagged.begin(), flagged.end());
    flagged.erase(std::unique(flagged.begin(), flagged.end()), flagged.end());
    return flagged;
}

namespace {

void check_distribution(std::span<const double> p, const char* name) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw InputError(std::string("js_divergence: ") + name + " has a negative or NaN entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw InputError(std::string("js_divergence: ") + name + " does not sum to 1");
}

// a * log2(2a / (a + b)), with the 0·log 0 = 0 convention.
double half_term(double a, double b) {
    if (a == 0.0) return 0.0;
    return a * std::log2(2.0 * a / (a + b));
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) throw InputError("js_divergence: distributions differ in length");
    check_distribution(p, "p");
    check_distribution(q, "q");
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) js += 0.5 * (half_term(p[i], q[i]) + half_term(q[i], p[i]));
    return std::clamp(js, 0.0, 1.0);
}

HeterophilousEdgeSet score_edges(std::vector<EdgePair> edges, const SoftLabelMatrix& soft) {
    HeterophilousEdgeSet he;
    he.scores.resize(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        he.scores[k] = js_divergence(soft.row(edges[k].first), soft.row(edges[k].second));
    }
    he.edges = std::move(edges);
    return he;
}

SamplingDistribution sampling_probs(std::span<const double> scores) {
    if (scores.empty()) throw InputError("sampling_probs: empty score list");
    const double top = *std::max_element(scores.begin(), scores.end());
    SamplingDistribution dist;
    dist.probs.resize(scores.size());
    double total = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        dist.probs[k] = std::exp(scores[k] - top);
        total += dist.probs[k];
    }
    for (double& p : dist.probs) p /= total;
    return dist;
}

EliminationResult eliminate_edges(const SparseGraph& g, const HeterophilousEdgeSet& he,
                                  const SamplingDistribution& dist, double q, std::uint64_t seed) {
    if (dist.probs.size() != he.size()) throw InputError("eliminate_edges: distribution is not aligned with H_e");
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("eliminate_edges: q must lie in [0, 1]");
    // The small slack keeps e.g. 0.29 * 100 from flooring to 28.
    const auto k = std::min(he.size(), static_cast<std::size_t>(std::floor(q * static_cast<double>(he.size()) + 1e-9)));

    EliminationResult result;
    std::vector<double> weight = dist.probs;
    std::mt19937_64 rng(seed);
    for (std::size_t draw = 0; draw < k; ++draw) {
        double total = 0.0;
        for (double w : weight) total += w;
        std::uniform_real_distribution<double> unit(0.0, total);
        const double target = unit(rng);
        double acc = 0.0;
        std::size_t chosen = weight.size();
        std::size_t last_live = weight.size();
        for (std::size_t e = 0; e < weight.size(); ++e) {
            if (weight[e] <= 0.0) continue;
            last_live = e;
            acc += weight[e];
            if (target < acc) {
                chosen = e;
                break;
            }
        }
        if (chosen == weight.size()) chosen = last_live;  // rounding at the upper end
        if (chosen == weight.size()) break;
        weight[chosen] = 0.0;
        result.removed.push_back(he.edges[chosen]);
    }
    result.graph = result.removed.empty() ? g : g.without_edges(result.removed);
    return result;
}

namespace {

double homophily_or_nan(const Dataset& ds) {
    try {
        return homophily_ratio(ds.graph, ds.labels);
    } catch (const UndefinedRatioError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iter) {
    return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(iter) + 1));
}

}  // namespace

ChagnnResult chagnn_run(const Dataset& ds, std::span<const NodeId> modified, const DefenseConfig& cfg,
                        const TrainConfig& tcfg, std::uint64_t seed) {
    cfg.validate();
    tcfg.validate();

    ChagnnResult out;
    out.cleaned = ds;
    GcnParams params = train(ds, tcfg, seed).params;
    {
        const auto pred = pseudo_labels(gcn_forward(normalize_adjacency(ds.graph), ds.features, params));
        out.pretrain_val_acc = ds.val_nodes().empty() ? 0.0 : accuracy(pred, ds.labels, ds.val_mask);
        out.pretrain_test_acc = ds.test_nodes().empty() ? 0.0 : accuracy(pred, ds.labels, ds.test_mask);
    }
    const auto labeled = ds.labeled_nodes();

    for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
        Dataset& current = out.cleaned;
        const auto soft = gcn_forward(normalize_adjacency(current.graph), current.features, params);
        const auto pseudo = pseudo_labels(soft);
        auto flagged = identify_heterophilous(current.graph, modified, labeled, current.labels, pseudo);

        IterationRecord rec;
        rec.iter = iter;
        rec.he_size = flagged.size();
        if (!flagged.empty()) {
            const auto he = score_edges(std::move(flagged), soft);
            const auto dist = sampling_probs(he.scores);
            auto elim = eliminate_edges(current.graph, he, dist, cfg.elimination_rate, iteration_seed(seed, iter));
            rec.removed = elim.removed.size();
            current.graph = std::move(elim.graph);
        }

        params = fine_tune(params, current, tcfg).params;

        const auto pred = pseudo_labels(gcn_forward(normalize_adjacency(current.graph), current.features, params));
        rec.val_acc = current.val_nodes().empty() ? 0.0 : accuracy(pred, current.labels, current.val_mask);
        rec.test_acc = current.test_nodes().empty() ? 0.0 : accuracy(pred, current.labels, current.test_mask);
        rec.homophily = homophily_or_nan(current);
        out.history.push_back(rec);
    }
    out.params = std::move(params);
    return out;
}

ChagnnResult chagnn_run(const Dataset& ds, const DefenseConfig& cfg, const TrainConfig& tcfg, std::uint64_t seed) {
    const auto modified = modified_node_set(ds);
    return chagnn_run(ds, modified, cfg, tcfg, seed);
}

ChagnnResult chagnn_run(const PoisonedDataset& p, const DefenseConfig& cfg, const TrainConfig& tcfg,
                        std::uint64_t seed) {
    const auto modified = modified_node_set(p);
    return chagnn_run(p.merged, modified, cfg, tcfg, seed);
}

std::string history_jsonl(std::span<const IterationRecord> history) {
    std::string out;
    for (const auto& rec : history) {
        nlohmann::json line = {{"iter", rec.iter},         {"removed", rec.removed},   {"he_size", rec.he_size},
                               {"val_acc", rec.val_acc},   {"test_acc", rec.test_acc}};
        // JSON has no NaN; an undefined ratio is written as null.
        line["homophily"] = std::isnan(rec.homophily) ? nlohmann::json(nullptr) : nlohmann::json(rec.homophily);
        out += line.dump();
        out += '\n';
    }
    return out;
}

Dataset baseline_adaedge(const Dataset& ds, std::span<const NodeId> modified, std::span<const int> pseudo) {
    const auto flagged = identify_heterophilous(ds.graph, modified, ds.labeled_nodes(), ds.labels, pseudo);
    Dataset out = ds;
    if (!flagged.empty()) out.graph = ds.graph.without_edges(flagged);
    return out;
}

Dataset baseline_adaedge(const Dataset& ds, std::span<const int> pseudo) {
    const auto modified = modified_node_set(ds);
    return baseline_adaedge(ds, modified, pseudo);
}

double jaccard_similarity(const Matrix& features, NodeId u, NodeId v) {
    std::size_t both = 0, either = 0;
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const bool a = features(u, j) > 0.0;
        const bool b = features(v, j) > 0.0;
        both += (a && b) ? 1 : 0;
        either += (a || b) ? 1 : 0;
    }
    return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

Dataset baseline_jaccard(const Dataset& ds, double threshold) {
    std::vector<EdgePair> drop;
    for (const auto& [u, v] : ds.graph.edges()) {
        if (jaccard_similarity(ds.features, u, v) < threshold) drop.emplace_back(u, v);
    }
    Dataset out = ds;
    if (!drop.empty()) out.graph = ds.graph.without_edges(drop);
    return out;
}

}  // namespace chagnn
