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

#include "chagnn/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "chagnn/errors.hpp"
#include "chagnn/gcn.hpp"

namespace chagnn {

void TheoremScenario::validate() const {
    if (num_classes < 2) throw InputError("scenario: need at least two classes");
    if (same_class_edges + other_class_edges != degree) throw InputError("scenario: a + b must equal d");
    if (same_class_edges == other_class_edges) throw DegenerateScenarioError("scenario: a == b leaves no homophily contrast");
    if (same_class_edges < other_class_edges) throw InputError("scenario: needs a > b");
    if (injected_edges == 0) throw InputError("scenario: needs at least one injected edge");
    if (!(feature_strength >= 0.0 && feature_strength <= 1.0)) throw InputError("scenario: feature strength outside [0, 1]");
    if (feature_strength == 0.0) throw DegenerateScenarioError("scenario: zero feature strength makes s0 == s1");
    if (weight_scale == 0.0 || !std::isfinite(weight_scale)) throw InputError("scenario: weight scale must be finite and nonzero");
}

nlohmann::json TheoremScenario::to_json() const {
    return {{"C", num_classes},          {"d", degree}, {"a", same_class_edges}, {"b", other_class_edges},
            {"l", injected_edges},       {"feature_strength", feature_strength}, {"weight_scale", weight_scale}};
}

Matrix optimal_weights(std::size_t num_classes, double weight_scale) {
    if (num_classes < 2) throw InputError("optimal_weights: need at least two classes");
    if (weight_scale == 0.0) throw InputError("optimal_weights: weight scale must be nonzero");
    const auto c = static_cast<Eigen::Index>(num_classes);
    const double cd = static_cast<double>(num_classes);
    Matrix w = Matrix::Constant(c, c, -1.0 + 1.0 / cd);
    for (Eigen::Index i = 0; i < c; ++i) w(i, i) = cd - 1.0 + 1.0 / cd;
    return weight_scale * w;
}

namespace {

struct Proportions {
    double h0, h1, r0, r1, r2;
};

Proportions proportions(const TheoremScenario& sc) {
    const double a = static_cast<double>(sc.same_class_edges);
    const double b = static_cast<double>(sc.other_class_edges);
    const double d = static_cast<double>(sc.degree);
    const double l = static_cast<double>(sc.injected_edges);
    return {a / d, b / d, a / (d + l), b / (d + l), l / (d + l)};
}

double feature_major(const TheoremScenario& sc) {
    return sc.feature_strength + (1.0 - sc.feature_strength) / static_cast<double>(sc.num_classes);
}

double feature_minor(const TheoremScenario& sc) {
    return (1.0 - sc.feature_strength) / static_cast<double>(sc.num_classes);
}

}  // namespace

CmLossReport closed_form_losses(const TheoremScenario& sc) {
    sc.validate();
    const auto pr = proportions(sc);
    CmLossReport rep;
    rep.x0 = feature_major(sc);
    rep.x1 = feature_minor(sc);
    rep.s0 = pr.h0 * rep.x0 + (1.0 - pr.h0) * rep.x1;
    rep.s1 = pr.h1 * rep.x0 + (1.0 - pr.h1) * rep.x1;
    if (rep.s0 == rep.s1) throw DegenerateScenarioError("closed_form_losses: s0 == s1");
    // A competing-class neighbour sees the mirror image; injected nodes copy the real mode.
    rep.t0 = rep.s1;
    rep.t1 = rep.s0;
    rep.f0 = rep.s0;
    rep.f1 = rep.s1;
    const double gap = rep.s0 - rep.s1;
    rep.L0 = (pr.h0 - pr.h1) * gap;
    rep.L1 = (pr.r0 - pr.r1 + pr.r2) * gap;
    rep.L2 = (pr.r0 - pr.r1 - pr.r2) * gap;
    rep.ratio_measured = (rep.L1 - rep.L0) / (rep.L0 - rep.L2);
    rep.ratio_closed_form =
        ((pr.r0 - pr.r1 + pr.r2) - (pr.h0 - pr.h1)) / ((pr.h0 - pr.h1) - (pr.r0 - pr.r1 - pr.r2));
    rep.ratio_ba = static_cast<double>(sc.other_class_edges) / static_cast<double>(sc.same_class_edges);
    return rep;
}

namespace {

class TreeBuilder {
public:
    explicit TreeBuilder(int competing) : competing_(competing) {}

    NodeId add(int cls) {
        labels_.push_back(cls);
        return static_cast<NodeId>(labels_.size() - 1);
    }

    void attach_leaves(NodeId hub, std::size_t count, int cls) {
        for (std::size_t i = 0; i < count; ++i) edges_.emplace_back(hub, add(cls));
    }

    // Neighbour of the class-0 target whose closed neighbourhood (self and
    // target included) holds `class0_in_hood` class-0 nodes and
    // `competing_in_hood` competing-class nodes.
    void add_neighbour(NodeId target, int cls, std::size_t class0_in_hood, std::size_t competing_in_hood) {
        const NodeId u = add(cls);
        edges_.emplace_back(target, u);
        std::size_t same_left = class0_in_hood;
        std::size_t comp_left = competing_in_hood;
        (cls == 0 ? same_left : comp_left) -= 1;  // self
        same_left -= 1;                            // target
        attach_leaves(u, same_left, 0);
        attach_leaves(u, comp_left, competing_);
    }

    std::vector<int> labels_;
    std::vector<EdgePair> edges_;

private:
    int competing_;
};

}  // namespace

ScenarioGraph build_scenario_graph(const TheoremScenario& sc, Injection kind, std::uint64_t seed) {
    sc.validate();
    const std::size_t a = sc.same_class_edges;
    const std::size_t b = sc.other_class_edges;
    const std::size_t d = sc.degree;
    if (a < 2) throw ConfigError("scenario: a >= 2 is needed to realize the neighbourhood as a tree");

    // Canonical frame: target class 0, competing class 1; the shuffle below
    // relabels ids only.
    TreeBuilder tb(1);
    const NodeId v = tb.add(0);
    for (std::size_t i = 0; i + 1 < a; ++i) tb.add_neighbour(v, 0, a, b);
    for (std::size_t i = 0; i < b; ++i) tb.add_neighbour(v, 1, b, a);
    for (std::size_t i = 0; i < sc.injected_edges && kind != Injection::None; ++i) {
        if (kind == Injection::Homophilous) {
            tb.add_neighbour(v, 0, a, b);
        } else if (b >= 1) {
            tb.add_neighbour(v, 1, b, a);
        } else {
            // No competing mode to copy when b == 0: fill the hood with the competing class.
            tb.add_neighbour(v, 1, 1, d - 1);
        }
    }

    const std::size_t n = tb.labels_.size();
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<EdgePair> edges;
    edges.reserve(tb.edges_.size());
    for (const auto& [u, w] : tb.edges_) edges.emplace_back(perm[u], perm[w]);

    ScenarioGraph out;
    out.target = perm[v];
    out.target_class = 0;
    out.competing_class = 1;
    Dataset& ds = out.data;
    ds.graph = build_graph(edges, n);
    ds.num_classes = sc.num_classes;
    ds.labels.assign(n, 0);
    ds.features = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sc.num_classes),
                                   feature_minor(sc));
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = tb.labels_[i];
        ds.labels[perm[i]] = cls;
        ds.features(perm[i], cls) = feature_major(sc);
    }
    ds.train_mask.assign(n, false);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    return out;
}

namespace {

struct Measured {
    double margin;         // raw logit margin at the target
    double same_hop[2];    // one-hop aggregate of a class-0 node (own, competing coordinate)
    double other_hop[2];   // one-hop aggregate of a class-1 node
};

Measured measure(const TheoremScenario& sc, Injection kind, std::uint64_t seed) {
    const auto sg = build_scenario_graph(sc, kind, seed);
    const auto adj = normalize_adjacency(sg.data.graph, Normalization::RowStochastic);
    const auto out = sgc_forward(adj, sg.data.features, SgcParams{optimal_weights(sc.num_classes, sc.weight_scale)});
    const auto cols = static_cast<std::size_t>(out.logits.cols());
    Measured m{};
    m.margin = cm_loss({out.logits.data() + sg.target * cols, cols}, sg.target_class);

    const Matrix hop = spmm(adj, sg.data.features);
    bool have_same = false, have_other = false;
    for (NodeId u : sg.data.graph.neighbors(sg.target)) {
        const int cls = sg.data.labels[u];
        if (cls == 0 && !have_same) {
            m.same_hop[0] = hop(u, 0);
            m.same_hop[1] = hop(u, 1);
            have_same = true;
        } else if (cls == 1 && !have_other) {
            m.other_hop[0] = hop(u, 0);
            m.other_hop[1] = hop(u, 1);
            have_other = true;
        }
    }
    return m;
}

}  // namespace

CmLossReport simulate_losses(const TheoremScenario& sc, std::uint64_t seed) {
    sc.validate();
    const double scale = sc.weight_scale * static_cast<double>(sc.num_classes);
    const auto clean = measure(sc, Injection::None, seed);
    const auto homo = measure(sc, Injection::Homophilous, seed);
    const auto hetero = measure(sc, Injection::Heterophilous, seed);

    CmLossReport rep;
    rep.x0 = feature_major(sc);
    rep.x1 = feature_minor(sc);
    rep.s0 = clean.same_hop[0];
    rep.s1 = clean.same_hop[1];
    // The heterophilous graph always has a competing-class neighbour.
    rep.t0 = hetero.other_hop[0];
    rep.t1 = hetero.other_hop[1];
    rep.f0 = homo.same_hop[0];
    rep.f1 = homo.same_hop[1];
    rep.L0 = clean.margin / scale;
    rep.L1 = homo.margin / scale;
    rep.L2 = hetero.margin / scale;
    rep.ratio_measured = (homo.margin - clean.margin) / (clean.margin - hetero.margin);

    const auto pr = proportions(sc);
    rep.ratio_closed_form =
        ((pr.r0 - pr.r1 + pr.r2) - (pr.h0 - pr.h1)) / ((pr.h0 - pr.h1) - (pr.r0 - pr.r1 - pr.r2));
    rep.ratio_ba = static_cast<double>(sc.other_class_edges) / static_cast<double>(sc.same_class_edges);
    return rep;
}

Theorem1Result theorem1_check(const TheoremScenario& sc, std::uint64_t seed, double tolerance) {
    Theorem1Result res;
    res.scenario = sc;
    try {
        res.report = simulate_losses(sc, seed);
    } catch (const DegenerateScenarioError&) {
        res.degenerate = true;
        res.pass = true;
        return res;
    }
    res.delta_closed = std::abs(res.report.ratio_measured - res.report.ratio_closed_form);
    res.delta_ba = std::abs(res.report.ratio_measured - res.report.ratio_ba);
    res.pass = res.delta_closed < tolerance && res.delta_ba < tolerance;
    return res;
}

std::vector<Theorem1Result> theorem1_grid(const Theorem1Grid& grid, std::uint64_t seed, double tolerance) {
    std::vector<Theorem1Result> out;
    for (std::size_t c : grid.classes) {
        for (std::size_t a : grid.same) {
            for (std::size_t b = 0; b <= a; ++b) {
                if ((b == a) != grid.degenerate_only) continue;
                for (std::size_t l : grid.injected) {
                    TheoremScenario sc;
                    sc.num_classes = c;
                    sc.same_class_edges = a;
                    sc.other_class_edges = b;
                    sc.degree = a + b;
                    sc.injected_edges = l;
                    sc.feature_strength = grid.feature_strength;
                    sc.weight_scale = grid.weight_scale;
                    out.push_back(theorem1_check(sc, seed, tolerance));
                }
            }
        }
    }
    return out;
}

BoundReport theorem2_check(const TheoremScenario& sc, double accuracy, std::size_t samples, std::uint64_t seed) {
    if (!(accuracy > 0.5 && accuracy < 1.0)) throw InputError("theorem2_check: accuracy must lie in (0.5, 1)");
    if (samples < 10000) throw InputError("theorem2_check: at least 10^4 samples are required");
    sc.validate();

    const double a = static_cast<double>(sc.same_class_edges);
    const double b = static_cast<double>(sc.other_class_edges);
    const double d = static_cast<double>(sc.degree);
    const double l = static_cast<double>(sc.injected_edges);
    const int classes = static_cast<int>(sc.num_classes);
    const double p_homophilous = a / (d + l);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> other(1, classes - 1);
    auto predict = [&](int truth) {
        if (unit(rng) < accuracy) return truth;
        return (truth + other(rng)) % classes;
    };

    std::size_t flagged_homo = 0, flagged_hetero = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const bool homo = unit(rng) < p_homophilous;
        const int yu = 0;
        const int yv = homo ? 0 : 1;
        const bool flagged = predict(yu) != predict(yv);
        if (flagged) ++(homo ? flagged_homo : flagged_hetero);
    }

    BoundReport rep;
    rep.accuracy = accuracy;
    rep.samples = samples;
    const double n = static_cast<double>(samples);
    rep.p1_est = static_cast<double>(flagged_homo) / n;
    rep.p2_est = 1.0 - rep.p1_est;
    const double miss = 1.0 - accuracy;
    rep.p1_analytic = (1.0 - accuracy * accuracy - miss * miss / static_cast<double>(classes - 1)) * p_homophilous;
    rep.ratio_est = rep.p1_est / rep.p2_est * (b / a);
    constexpr double kZ99 = 2.326;  // one-sided 99% normal quantile
    const double p1_upper = std::min(rep.p1_est + kZ99 * std::sqrt(rep.p1_est * (1.0 - rep.p1_est) / n), 1.0 - 1e-12);
    rep.ratio_upper = p1_upper / (1.0 - p1_upper) * (b / a);
    rep.bound = 2.0 * accuracy * miss;
    rep.tight_bound = rep.bound * b / (b + l);
    rep.conditional_ratio = flagged_hetero == 0
                                ? std::numeric_limits<double>::infinity()
                                : static_cast<double>(flagged_homo) / static_cast<double>(flagged_hetero) * (b / a);
    rep.pass = rep.ratio_upper < rep.bound && rep.ratio_upper <= rep.tight_bound;
    return rep;
}

nlohmann::json theorem_report_json(const std::vector<Theorem1Result>& grid, const std::vector<BoundReport>& bounds) {
    nlohmann::json points = nlohmann::json::array();
    bool all_pass = true;
    std::size_t skipped = 0;
    for (const auto& r : grid) {
        all_pass = all_pass && r.pass;
        nlohmann::json j = {{"scenario", r.scenario.to_json()}, {"pass", r.pass}, {"degenerate", r.degenerate}};
        if (r.degenerate) {
            ++skipped;
        } else {
            j["L0"] = r.report.L0;
            j["L1"] = r.report.L1;
            j["L2"] = r.report.L2;
            j["ratio_measured"] = r.report.ratio_measured;
            j["ratio_closed"] = r.report.ratio_closed_form;
            j["ratio_ba"] = r.report.ratio_ba;
            j["delta_closed"] = r.delta_closed;
            j["delta_ba"] = r.delta_ba;
        }
        points.push_back(std::move(j));
    }
    nlohmann::json bound_rows = nlohmann::json::array();
    for (const auto& b : bounds) {
        all_pass = all_pass && b.pass;
        bound_rows.push_back({{"p", b.accuracy},
                              {"bound", b.bound},
                              {"tight_bound", b.tight_bound},
                              {"ratio_est", b.ratio_est},
                              {"ratio_upper", b.ratio_upper},
                              {"p1_est", b.p1_est},
                              {"p2_est", b.p2_est},
                              {"p1_analytic", b.p1_analytic},
                              {"conditional_ratio", std::isfinite(b.conditional_ratio)
                                                        ? nlohmann::json(b.conditional_ratio)
                                                        : nlohmann::json(nullptr)},
                              {"samples", b.samples},
                              {"pass", b.pass}});
    }
    return {{"theorem1", points}, {"theorem2", bound_rows}, {"skipped", skipped}, {"pass", all_pass}};
}

}  // namespace chagnn
