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

#include "chagnn/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "chagnn/errors.hpp"

namespace chagnn {

void AttackBudget::validate() const {
    if (num_inject > 0 && inject_degree < 1) throw ConfigError("attack: inject_degree must be >= 1");
    if (feature_min && feature_max && *feature_min > *feature_max)
        throw ConfigError("attack: feature_min exceeds feature_max");
    if (!(step_size >= 0.0)) throw ConfigError("attack: step_size must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("attack: momentum must lie in [0, 1)");
}

namespace {

void resolve_bounds(const Dataset& ds, const AttackBudget& budget, std::vector<double>& lo, std::vector<double>& hi) {
    const auto d = static_cast<Eigen::Index>(ds.num_features());
    lo.assign(static_cast<std::size_t>(d), 0.0);
    hi.assign(static_cast<std::size_t>(d), 0.0);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto k = static_cast<std::size_t>(j);
        lo[k] = budget.feature_min ? *budget.feature_min
                                   : (ds.features.rows() > 0 ? ds.features.col(j).minCoeff() : 0.0);
        hi[k] = budget.feature_max ? *budget.feature_max
                                   : (ds.features.rows() > 0 ? ds.features.col(j).maxCoeff() : 0.0);
        if (lo[k] > hi[k]) throw ConfigError("attack: empty feature range on coordinate " + std::to_string(j));
    }
}

Dataset merge(const Dataset& base, std::size_t num_inject, std::span<const EdgePair> new_edges, const Matrix& x_inj) {
    Dataset m;
    m.graph = base.graph.extended(num_inject, new_edges);
    m.features.resize(base.features.rows() + static_cast<Eigen::Index>(num_inject), base.features.cols());
    m.features.topRows(base.features.rows()) = base.features;
    if (num_inject > 0) m.features.bottomRows(static_cast<Eigen::Index>(num_inject)) = x_inj;
    m.num_classes = base.num_classes;
    m.labels = base.labels;
    m.labels.resize(base.num_nodes() + num_inject, kUnknownLabel);
    m.train_mask = base.train_mask;
    m.train_mask.resize(base.num_nodes() + num_inject, false);
    m.val_mask = base.val_mask;
    m.val_mask.resize(base.num_nodes() + num_inject, false);
    m.test_mask = base.test_mask;
    m.test_mask.resize(base.num_nodes() + num_inject, false);
    return m;
}

std::vector<NodeId> touched_targets(const PoisonedDataset& p) {
    std::vector<bool> hit(p.base.num_nodes(), false);
    for (NodeId i : p.injected_ids) {
        for (NodeId v : p.merged.graph.neighbors(i)) {
            if (v < p.base.num_nodes() && p.base.test_mask[v]) hit[v] = true;
        }
    }
    return mask_to_nodes(hit);
}

double surrogate_loss(const SparseGraph& g, const Matrix& x, const GcnParams& surrogate, std::span<const int> labels,
                      std::span<const NodeId> eval_nodes) {
    const auto adj = normalize_adjacency(g);
    const auto trace = gcn_trace(adj, spmm(adj, x), surrogate);
    return cross_entropy(trace.probs, labels, eval_nodes);
}

struct EdgeAction {
    std::optional<NodeId> add;     // partner to connect
    std::optional<NodeId> remove;  // partner to disconnect
    NodeId actor = 0;
    double gain = 0.0;
};

PoisonedDataset gradient_attack(const Dataset& ds, const AttackBudget& budget, const GcnParams& surrogate,
                                std::uint64_t seed, double momentum, AttackLog* log) {
    if (surrogate.input_dim() != ds.num_features() ||
        surrogate.num_classes() != static_cast<std::size_t>(ds.num_classes))
        throw InputError("attack: surrogate dimensions do not match the dataset");

    PoisonedDataset p = heuristic_inject(ds, budget, seed);
    const auto eval_nodes = ds.test_nodes();
    double current = surrogate_loss(p.merged.graph, p.merged.features, surrogate, p.merged.labels, eval_nodes);
    if (log) {
        log->loss = {current};
        log->edges_flipped = 0;
    }
    if (budget.opt_iters == 0 || budget.num_inject == 0) return p;

    const std::size_t n = ds.num_nodes();
    const std::size_t ni = budget.num_inject;
    const std::size_t total = n + ni;
    const auto d = static_cast<Eigen::Index>(ds.num_features());

    // Candidate partners: original test nodes (A_OI block) and injected nodes (A_I block).
    std::vector<NodeId> cands = eval_nodes;
    for (NodeId i : p.injected_ids) cands.push_back(i);
    std::vector<long> cand_index(total, -1);
    for (std::size_t k = 0; k < cands.size(); ++k) cand_index[cands[k]] = static_cast<long>(k);
    const auto n_cand = static_cast<Eigen::Index>(cands.size());

    std::vector<double> width(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < width.size(); ++j) width[j] = p.feature_hi[j] - p.feature_lo[j];

    SparseGraph graph = p.merged.graph;
    Matrix x = p.merged.features;
    Matrix edge_mom = Matrix::Zero(static_cast<Eigen::Index>(ni), n_cand);
    Matrix feat_mom = Matrix::Zero(static_cast<Eigen::Index>(ni), d);

    auto gather = [](const Matrix& m, std::span<const NodeId> rows) {
        Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
        return out;
    };

    for (std::size_t round = 0; round < budget.opt_iters; ++round) {
        const auto adj = normalize_adjacency(graph);
        const auto trace = gcn_trace(adj, spmm(adj, x), surrogate);
        Matrix dz, dpre;
        cross_entropy(trace.probs, p.merged.labels, eval_nodes, &dz);
        gcn_backward(adj, trace, surrogate, dz, &dpre);
        const Matrix xw1 = x * surrogate.w1;

        // dLoss/dÂ(u, v) = dz_u · hw_v + dpre_u · xw1_v. Flipping an edge also moves
        // two degrees; corr[k] is dLoss/d(deg̃_k) through every entry of row/column k.
        std::vector<double> deg_tilde(total), corr(total, 0.0);
        for (NodeId k = 0; k < total; ++k) {
            deg_tilde[k] = static_cast<double>(graph.degree(k) + 1);
            double acc = 0.0;
            for (std::size_t e = adj.row_offsets[k]; e < adj.row_offsets[k + 1]; ++e) {
                const NodeId j = adj.col_indices[e];
                const double g_kj = dz.row(k).dot(trace.hw.row(j)) + dpre.row(k).dot(xw1.row(j));
                const double g_jk = dz.row(j).dot(trace.hw.row(k)) + dpre.row(j).dot(xw1.row(k));
                acc += (g_kj + g_jk) * adj.weights[e];
            }
            corr[k] = -acc / (2.0 * deg_tilde[k]);
        }

        const Matrix dz_i = gather(dz, p.injected_ids), hw_i = gather(trace.hw, p.injected_ids);
        const Matrix dpre_i = gather(dpre, p.injected_ids), xw1_i = gather(xw1, p.injected_ids);
        const Matrix dz_c = gather(dz, cands), hw_c = gather(trace.hw, cands);
        const Matrix dpre_c = gather(dpre, cands), xw1_c = gather(xw1, cands);
        Matrix pair_grad = dz_i * hw_c.transpose() + hw_i * dz_c.transpose() + dpre_i * xw1_c.transpose() +
                           xw1_i * dpre_c.transpose();
        for (Eigen::Index r = 0; r < pair_grad.rows(); ++r) {
            const NodeId i = p.injected_ids[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < n_cand; ++c) {
                const NodeId v = cands[static_cast<std::size_t>(c)];
                pair_grad(r, c) = pair_grad(r, c) / std::sqrt(deg_tilde[i] * deg_tilde[v]) + corr[i] + corr[v];
            }
        }
        edge_mom = momentum * edge_mom + pair_grad;

        // Â is symmetric, so dLoss/dX = Â (dpre W1ᵀ).
        const Matrix dx = spmm(adj, dpre * surrogate.w1.transpose());
        feat_mom = momentum * feat_mom + dx.bottomRows(static_cast<Eigen::Index>(ni));

        // One action per injected node; a node acted on (or rewired to) this round is frozen.
        std::vector<bool> busy(ni, false);
        std::vector<std::size_t> live_degree(total);
        for (NodeId k = 0; k < total; ++k) live_degree[k] = graph.degree(k);
        std::vector<EdgeAction> actions;
        for (std::size_t r = 0; r < ni; ++r) {
            if (busy[r]) continue;
            const NodeId i = p.injected_ids[r];
            const auto score = [&](NodeId v) { return edge_mom(static_cast<Eigen::Index>(r), cand_index[v]); };
            auto nbrs = graph.neighbors(i);

            std::optional<NodeId> best_add;
            double add_score = 0.0;
            for (Eigen::Index c = 0; c < n_cand; ++c) {
                const NodeId v = cands[static_cast<std::size_t>(c)];
                if (v == i || std::binary_search(nbrs.begin(), nbrs.end(), v)) continue;
                if (v >= n && (busy[v - n] || live_degree[v] >= budget.inject_degree)) continue;
                const double s = edge_mom(static_cast<Eigen::Index>(r), c);
                if (s > add_score) {
                    add_score = s;
                    best_add = v;
                }
            }
            std::optional<NodeId> worst;
            double rem_score = 0.0;
            for (NodeId v : nbrs) {
                if (v >= n && busy[v - n]) continue;
                const double s = score(v);
                if (!worst || s < rem_score) {
                    rem_score = s;
                    worst = v;
                }
            }

            EdgeAction best;
            best.actor = i;
            if (best_add && live_degree[i] < budget.inject_degree && add_score > best.gain) {
                best.add = best_add;
                best.remove.reset();
                best.gain = add_score;
            }
            if (worst && -rem_score > best.gain) {
                best.add.reset();
                best.remove = worst;
                best.gain = -rem_score;
            }
            if (best_add && worst && live_degree[i] >= budget.inject_degree && add_score - rem_score > best.gain) {
                best.add = best_add;
                best.remove = worst;
                best.gain = add_score - rem_score;
            }
            if (best.gain <= 0.0) continue;

            busy[r] = true;
            if (best.add) {
                if (*best.add >= n) busy[*best.add - n] = true;
                ++live_degree[i];
                ++live_degree[*best.add];
            }
            if (best.remove) {
                if (*best.remove >= n) busy[*best.remove - n] = true;
                --live_degree[i];
                --live_degree[*best.remove];
            }
            actions.push_back(best);
        }
        std::stable_sort(actions.begin(), actions.end(),
                         [](const EdgeAction& a, const EdgeAction& b) { return a.gain > b.gain; });

        Matrix x_step = x;
        for (std::size_t r = 0; r < ni; ++r) {
            const auto row = static_cast<Eigen::Index>(n + r);
            for (Eigen::Index j = 0; j < d; ++j) {
                const double g = feat_mom(static_cast<Eigen::Index>(r), j);
                const double dir = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
                const auto k = static_cast<std::size_t>(j);
                x_step(row, j) =
                    std::clamp(x(row, j) + budget.step_size * width[k] * dir, p.feature_lo[k], p.feature_hi[k]);
            }
        }
        const bool features_move = x_step != x;
        if (actions.empty() && !features_move) break;

        // Backtrack: halve the accepted edge actions and the feature step until the
        // true attack loss does not decrease.
        bool accepted = false;
        std::size_t keep = actions.size();
        double scale = 1.0;
        for (int attempt = 0; attempt < 5 && !accepted; ++attempt) {
            std::vector<EdgePair> removed, added;
            for (std::size_t a = 0; a < keep; ++a) {
                if (actions[a].remove) removed.emplace_back(actions[a].actor, *actions[a].remove);
                if (actions[a].add) added.emplace_back(actions[a].actor, *actions[a].add);
            }
            SparseGraph trial_graph = graph.without_edges(removed).extended(0, added);
            Matrix trial_x = x + scale * (x_step - x);
            // The convex combination can round one ulp past a bound.
            for (std::size_t r = 0; r < ni; ++r) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    const auto k = static_cast<std::size_t>(j);
                    double& value = trial_x(static_cast<Eigen::Index>(n + r), j);
                    value = std::clamp(value, p.feature_lo[k], p.feature_hi[k]);
                }
            }
            const double trial = surrogate_loss(trial_graph, trial_x, surrogate, p.merged.labels, eval_nodes);
            if (trial >= current) {
                accepted = true;
                graph = std::move(trial_graph);
                x = std::move(trial_x);
                current = trial;
                if (log) {
                    log->loss.push_back(current);
                    log->edges_flipped += removed.size() + added.size();
                }
            } else {
                keep /= 2;
                scale *= 0.5;
            }
        }
        if (!accepted) break;

        p.merged.graph = graph;
        p.merged.features = x;
        if (auto violation = verify_injection_constraints(p))
            throw std::logic_error("attack produced an invalid poisoned graph: " + violation->message);
    }

    p.merged.graph = std::move(graph);
    p.merged.features = std::move(x);
    p.target_set = touched_targets(p);
    return p;
}

}  // namespace

PoisonedDataset heuristic_inject(const Dataset& ds, const AttackBudget& budget, std::uint64_t seed) {
    budget.validate();
    ds.validate();
    const auto test = ds.test_nodes();
    if (budget.num_inject > 0 && budget.inject_degree > test.size())
        throw ConfigError("attack: inject_degree " + std::to_string(budget.inject_degree) + " exceeds the " +
                          std::to_string(test.size()) + " available test nodes");

    PoisonedDataset p;
    p.base = ds;
    resolve_bounds(ds, budget, p.feature_lo, p.feature_hi);

    const std::size_t n = ds.num_nodes();
    std::mt19937_64 rng(seed);
    std::vector<EdgePair> new_edges;
    std::vector<NodeId> pool = test;
    for (std::size_t r = 0; r < budget.num_inject; ++r) {
        const auto id = static_cast<NodeId>(n + r);
        p.injected_ids.push_back(id);
        // Partial Fisher-Yates: the first inject_degree slots become the sample.
        for (std::size_t k = 0; k < budget.inject_degree; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
            std::swap(pool[k], pool[pick(rng)]);
            new_edges.emplace_back(id, pool[k]);
        }
    }

    Matrix x_inj(static_cast<Eigen::Index>(budget.num_inject), ds.features.cols());
    if (budget.num_inject > 0) {
        const Eigen::RowVectorXd mean = ds.features.colwise().mean();
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            const auto k = static_cast<std::size_t>(j);
            x_inj.col(j).setConstant(std::clamp(mean(j), p.feature_lo[k], p.feature_hi[k]));
        }
    }

    p.merged = merge(ds, budget.num_inject, new_edges, x_inj);
    p.target_set = touched_targets(p);
    return p;
}

PoisonedDataset fga_inject(const Dataset& ds, const AttackBudget& budget, const GcnParams& surrogate,
                           std::uint64_t seed, AttackLog* log) {
    return gradient_attack(ds, budget, surrogate, seed, 0.0, log);
}

PoisonedDataset mga_inject(const Dataset& ds, const AttackBudget& budget, const GcnParams& surrogate,
                           std::uint64_t seed, AttackLog* log) {
    return gradient_attack(ds, budget, surrogate, seed, budget.momentum, log);
}

double attack_loss(const PoisonedDataset& p, const GcnParams& surrogate) {
    return surrogate_loss(p.merged.graph, p.merged.features, surrogate, p.merged.labels, p.base.test_nodes());
}

std::optional<InjectionViolation> verify_injection_constraints(const PoisonedDataset& p) {
    using Kind = InjectionViolation::Kind;
    const std::size_t n = p.base.num_nodes();
    const std::size_t total = p.merged.num_nodes();
    if (total != n + p.injected_ids.size())
        return InjectionViolation{Kind::Shape, "merged node count differs from base plus injected"};
    for (std::size_t r = 0; r < p.injected_ids.size(); ++r) {
        if (p.injected_ids[r] != n + r)
            return InjectionViolation{Kind::Shape, "injected ids must be the contiguous range after the base nodes"};
    }
    if (p.merged.features.rows() != static_cast<Eigen::Index>(total) ||
        p.merged.features.cols() != p.base.features.cols() || p.merged.labels.size() != total ||
        p.merged.train_mask.size() != total || p.merged.val_mask.size() != total || p.merged.test_mask.size() != total)
        return InjectionViolation{Kind::Shape, "merged dataset arrays have inconsistent sizes"};

    for (NodeId u = 0; u < n; ++u) {
        auto base_nbrs = p.base.graph.neighbors(u);
        std::vector<NodeId> orig;
        for (NodeId v : p.merged.graph.neighbors(u)) {
            if (v < n) orig.push_back(v);
        }
        if (!std::equal(orig.begin(), orig.end(), base_nbrs.begin(), base_nbrs.end())) {
            for (NodeId v : orig) {
                if (!p.base.graph.has_edge(u, v))
                    return InjectionViolation{Kind::OriginalEdge, "edge (" + std::to_string(u) + ", " +
                                                                      std::to_string(v) +
                                                                      ") joins two original nodes"};
            }
            for (NodeId v : base_nbrs) {
                if (!p.merged.graph.has_edge(u, v))
                    return InjectionViolation{Kind::OriginalEdge, "original edge (" + std::to_string(u) + ", " +
                                                                      std::to_string(v) + ") was removed"};
            }
        }
        if (p.merged.features.row(u) != p.base.features.row(u))
            return InjectionViolation{Kind::OriginalNode, "features of original node " + std::to_string(u) + " changed"};
        if (p.merged.labels[u] != p.base.labels[u])
            return InjectionViolation{Kind::Label, "label of original node " + std::to_string(u) + " changed"};
        if (p.merged.train_mask[u] != p.base.train_mask[u] || p.merged.val_mask[u] != p.base.val_mask[u] ||
            p.merged.test_mask[u] != p.base.test_mask[u])
            return InjectionViolation{Kind::Mask, "split membership of original node " + std::to_string(u) + " changed"};
    }

    for (NodeId i : p.injected_ids) {
        for (Eigen::Index j = 0; j < p.merged.features.cols(); ++j) {
            const double value = p.merged.features(i, j);
            const auto k = static_cast<std::size_t>(j);
            if (k >= p.feature_lo.size() || value < p.feature_lo[k] || value > p.feature_hi[k])
                return InjectionViolation{Kind::FeatureBound, "injected node " + std::to_string(i) + " coordinate " +
                                                                  std::to_string(j) + " = " + std::to_string(value) +
                                                                  " is outside its bounds"};
        }
        if (p.merged.labels[i] != kUnknownLabel)
            return InjectionViolation{Kind::Label, "injected node " + std::to_string(i) + " has a known label"};
        if (p.merged.train_mask[i] || p.merged.val_mask[i] || p.merged.test_mask[i])
            return InjectionViolation{Kind::Mask, "injected node " + std::to_string(i) + " belongs to a split"};
    }
    return std::nullopt;
}

void save_poisoned(const PoisonedDataset& p, const std::filesystem::path& dir) {
    save_dataset(p.merged, dir);
    nlohmann::json doc = {{"injected_ids", p.injected_ids},
                          {"targets", p.target_set},
                          {"feature_min", p.feature_lo},
                          {"feature_max", p.feature_hi}};
    std::ofstream out(dir / "injected.json");
    if (!out) throw InputError("cannot write " + (dir / "injected.json").string());
    out << doc.dump() << '\n';
}

PoisonedDataset load_poisoned(const std::filesystem::path& dir) {
    PoisonedDataset p;
    p.merged = load_dataset(dir);
    std::ifstream in(dir / "injected.json");
    if (!in) throw FormatError("injected.json", 0, "missing from " + dir.string());
    try {
        const auto doc = nlohmann::json::parse(in);
        p.injected_ids = doc.at("injected_ids").get<std::vector<NodeId>>();
        p.target_set = doc.at("targets").get<std::vector<NodeId>>();
        if (doc.contains("feature_min")) p.feature_lo = doc.at("feature_min").get<std::vector<double>>();
        if (doc.contains("feature_max")) p.feature_hi = doc.at("feature_max").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("injected.json", 0, e.what());
    }

    if (p.injected_ids.size() > p.merged.num_nodes())
        throw FormatError("injected.json", 0, "more injected ids than nodes");
    const std::size_t n = p.merged.num_nodes() - p.injected_ids.size();
    std::vector<NodeId> originals(n);
    for (std::size_t i = 0; i < n; ++i) originals[i] = static_cast<NodeId>(i);
    p.base.graph = p.merged.graph.induced(originals);
    p.base.features = p.merged.features.topRows(static_cast<Eigen::Index>(n));
    p.base.labels.assign(p.merged.labels.begin(), p.merged.labels.begin() + static_cast<std::ptrdiff_t>(n));
    p.base.num_classes = p.merged.num_classes;
    p.base.train_mask.assign(p.merged.train_mask.begin(), p.merged.train_mask.begin() + static_cast<std::ptrdiff_t>(n));
    p.base.val_mask.assign(p.merged.val_mask.begin(), p.merged.val_mask.begin() + static_cast<std::ptrdiff_t>(n));
    p.base.test_mask.assign(p.merged.test_mask.begin(), p.merged.test_mask.begin() + static_cast<std::ptrdiff_t>(n));
    if (p.feature_lo.empty()) {
        AttackBudget defaults;
        resolve_bounds(p.base, defaults, p.feature_lo, p.feature_hi);
    }
    if (auto violation = verify_injection_constraints(p))
        throw FormatError("injected.json", 0, violation->message);
    return p;
}

}  // namespace chagnn
