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

// Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chagnn/dataset.hpp"
#include "chagnn/defense.hpp"
#include "chagnn/experiment.hpp"
#include "chagnn/gcn.hpp"
#include "chagnn/theory.hpp"
#include "test_util.hpp"

namespace {

using namespace chagnn;
using Clock = std::chrono::steady_clock;

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. Ratio identity over the full grid, < 1e-8 against both closed forms, < 5 s.
Outcome identity_grid() {
    const auto t0 = Clock::now();
    const auto rows = theorem1_grid(Theorem1Grid{}, 0, 1e-8);
    const double secs = seconds_since(t0);
    double worst = 0;
    std::size_t failed = 0;
    for (const auto& r : rows) {
        worst = std::max({worst, r.delta_closed, r.delta_ba});
        failed += r.pass ? 0 : 1;
    }
    return verdict(rows.size() == 180 && failed == 0 && secs < 5.0,
                   fmt("%zu points, %zu failed, max delta %.3g, %.2f s", rows.size(), failed, worst, secs));
}

// 2. W* entries for C=2, r=1 and ratio invariance under r in {0.5, 1, 3} to 1e-10.
Outcome weight_sanity() {
    const Matrix w = optimal_weights(2, 1.0);
    const bool exact = w(0, 0) == 1.5 && w(0, 1) == -0.5 && w(1, 0) == -0.5 && w(1, 1) == 1.5;
    double worst = 0;
    for (std::size_t c : {2, 3, 5})
        for (std::size_t a = 2; a <= 6; ++a)
            for (std::size_t b = 0; b < a; ++b)
                for (std::size_t l : {1, 2, 4}) {
                    TheoremScenario sc;
                    sc.num_classes = c;
                    sc.same_class_edges = a;
                    sc.other_class_edges = b;
                    sc.degree = a + b;
                    sc.injected_edges = l;
                    sc.weight_scale = 1.0;
                    const double ref = simulate_losses(sc, 0).ratio_measured;
                    for (double r : {0.5, 3.0}) {
                        sc.weight_scale = r;
                        worst = std::max(worst, std::abs(simulate_losses(sc, 0).ratio_measured - ref));
                    }
                }
    return verdict(exact && worst < 1e-10, fmt("W* exact: %s, max ratio drift over r %.3g", exact ? "yes" : "no", worst));
}

// 3. Penalty/benefit bound with 1e5 samples, 99% one-sided test, < 10 s.
Outcome bound_check() {
    const auto t0 = Clock::now();
    std::size_t failed = 0, total = 0;
    double worst_gap = -1;
    std::uint64_t seed = 0;
    for (double p : {0.6, 0.7, 0.8, 0.9})
        for (std::size_t l : {1, 4}) {
            TheoremScenario sc;
            sc.same_class_edges = 3;
            sc.other_class_edges = 1;
            sc.degree = 4;
            sc.injected_edges = l;
            const auto rep = theorem2_check(sc, p, 100000, seed++);
            ++total;
            failed += rep.pass ? 0 : 1;
            worst_gap = std::max(worst_gap, rep.ratio_upper / rep.bound);
        }
    const double secs = seconds_since(t0);
    return verdict(failed == 0 && secs < 10.0,
                   fmt("%zu cases, %zu failed, max upper/bound %.3f, %.2f s", total, failed, worst_gap, secs));
}

std::vector<double> random_simplex(std::size_t c, std::mt19937_64& rng) {
    std::gamma_distribution<double> g(0.7, 1.0);
    std::vector<double> v(c);
    double s = 0;
    for (auto& x : v) s += (x = g(rng));
    for (auto& x : v) x /= s;
    return v;
}

// 4. JS divergence properties on 1000 random pairs.
Outcome js_properties() {
    std::mt19937_64 rng(4);
    double asym = 0;
    bool range = true, zero_iff_equal = true;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t c = 2 + t % 9;
        const auto p = random_simplex(c, rng);
        const auto q = t % 10 == 0 ? p : random_simplex(c, rng);
        const double pq = js_divergence(p, q), qp = js_divergence(q, p);
        asym = std::max(asym, std::abs(pq - qp));
        range = range && pq >= 0.0 && pq <= 1.0;
        zero_iff_equal = zero_iff_equal && ((pq == 0.0) == (p == q));
    }
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
    const bool one = js_divergence(a, b) == 1.0;
    return verdict(asym <= 1e-12 && range && zero_iff_equal && one,
                   fmt("max asymmetry %.3g, range %s, zero-iff-equal %s, JS(e0,e1)==1 %s", asym, range ? "ok" : "bad",
                       zero_iff_equal ? "ok" : "bad", one ? "yes" : "no"));
}

// 5. Sampling distribution sums to one and preserves score order.
Outcome sampling_properties() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_sum = 0;
    std::size_t order_breaks = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> s(1 + t % 64);
        for (auto& x : s) x = u(rng);
        const auto d = sampling_probs(s).probs;
        double total = 0;
        for (double x : d) total += x;
        worst_sum = std::max(worst_sum, std::abs(total - 1.0));
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j)
                if (s[i] > s[j] && !(d[i] > d[j])) ++order_breaks;
    }
    return verdict(worst_sum <= 1e-12 && order_breaks == 0,
                   fmt("max |sum-1| %.3g, order violations %zu", worst_sum, order_breaks));
}

// 6. Backprop vs central differences on a random 10-node dataset.
Outcome gradient_correctness() {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = testing::random_dataset(10, 5, 3, 0.3, seed);
        const auto p = init_gcn_params(5, 8, 3, seed);
        worst = std::max(worst, gradient_check(ds, p, 1e-5, 5e-4));
    }
    return verdict(worst < 1e-4, fmt("max relative error %.3g", worst));
}

// 7. Flagging rule vs brute-force enumeration on 100 random graphs up to 50 nodes.
Outcome flagging_oracle() {
    std::mt19937_64 rng(7);
    std::size_t mismatches = 0, flagged_total = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng() % 49;
        const int c = 2 + static_cast<int>(rng() % 4);
        const auto ds = testing::random_dataset(n, 2, c, 0.05 + 0.3 * (t % 5) / 4.0, t);
        std::vector<int> pseudo(n);
        for (auto& y : pseudo) y = static_cast<int>(rng() % c);
        std::vector<NodeId> modified;
        for (NodeId i = 0; i < n; ++i)
            if (rng() % 3 != 0) modified.push_back(i);
        const auto labeled = ds.labeled_nodes();
        const std::set<NodeId> in_m(modified.begin(), modified.end()), in_l(labeled.begin(), labeled.end());

        std::vector<EdgePair> expect;
        for (NodeId u = 0; u < n; ++u)
            for (NodeId v = u + 1; v < n; ++v) {
                if (!ds.graph.has_edge(u, v)) continue;
                bool hit = false;
                for (auto [x, y] : {std::pair{u, v}, std::pair{v, u}}) {
                    if (!in_m.count(x)) continue;
                    const int ref = in_l.count(y) ? ds.labels[y] : pseudo[y];
                    hit = hit || ref != pseudo[x];
                }
                if (hit) expect.emplace_back(u, v);
            }
        const auto got = identify_heterophilous(ds.graph, modified, labeled, ds.labels, pseudo);
        mismatches += got == expect ? 0 : 1;
        flagged_total += expect.size();
    }
    return verdict(mismatches == 0, fmt("100 graphs, %zu mismatches, %zu flagged edges compared", mismatches, flagged_total));
}

struct Regression {
    ResultRecord chagnn, adaedge;
    double secs = 0;
    std::string error;
};

Regression run_regression() {
    Regression r;
    const auto t0 = Clock::now();
    try {
        auto cfg = ExperimentConfig::from_file(std::filesystem::path(CHAGNN_SOURCE_DIR) / "configs/regression.json");
        cfg.defense = DefenseKind::Chagnn;
        r.chagnn = run_experiment(cfg);
        cfg.defense = DefenseKind::AdaEdge;
        r.adaedge = run_experiment(cfg);
        if (!r.chagnn.ok() || !r.adaedge.ok()) r.error = "a regression run failed";
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    r.secs = seconds_since(t0);
    return r;
}

// 8. Attack drops accuracy by >= 8 points; the defense recovers >= 50% of it; < 2 min.
Outcome defense_regression(const Regression& r) {
    if (!r.error.empty()) return verdict(false, r.error);
    const double clean = r.chagnn.clean.mean, attacked = r.chagnn.attacked.mean, final_acc = r.chagnn.final_acc.mean;
    const double drop = clean - attacked;
    const double recovered = drop > 0 ? (final_acc - attacked) / drop : 0.0;
    return verdict(drop >= 0.08 && recovered >= 0.5 && r.secs < 120.0,
                   fmt("clean %.4f attacked %.4f defended %.4f: drop %.1f pts, recovered %.1f%% of it, %.1f s",
                       clean, attacked, final_acc, 100 * drop, 100 * recovered, r.secs));
}

// 9. Homophily after cleaning >= attacked homophily in at least 4 of 5 seeds.
Outcome homophily_gain(const Regression& r) {
    if (!r.error.empty()) return verdict(false, r.error);
    std::size_t up = 0;
    for (const auto& run : r.chagnn.runs) up += run.homophily_final >= run.homophily_attacked ? 1 : 0;
    return verdict(r.chagnn.runs.size() == 5 && up >= 4, fmt("%zu of %zu seeds", up, r.chagnn.runs.size()));
}

// 10. CHAGNN mean accuracy >= AdaEdge mean accuracy - 0.5 points.
Outcome ablation_order(const Regression& r) {
    if (!r.error.empty()) return verdict(false, r.error);
    const double ch = r.chagnn.final_acc.mean, ada = r.adaedge.final_acc.mean;
    return verdict(ch >= ada - 0.005, fmt("chagnn %.4f vs adaedge %.4f (diff %+.2f pts)", ch, ada, 100 * (ch - ada)));
}

// 11. Clean GCN accuracy on a user-supplied citation LCC within 3 points of 81.26.
Outcome citation_check() {
    const char* dir = std::getenv("CHAGNN_CORA_DIR");
    if (dir == nullptr || !std::filesystem::exists(dir)) return {Verdict::Skip, "CHAGNN_CORA_DIR not set or missing"};
    try {
        const auto ds = largest_connected_component(load_dataset(dir));
        std::vector<double> accs;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto p = train(ds, TrainConfig{}, seed).params;
            const auto pred = pseudo_labels(gcn_forward(normalize_adjacency(ds.graph), ds.features, p));
            accs.push_back(accuracy(pred, ds.labels, ds.test_mask));
        }
        const auto m = mean_std(accs);
        return verdict(std::abs(100 * m.mean - 81.26) <= 3.0,
                       fmt("%zu nodes, test accuracy %.2f +- %.2f over 5 seeds", ds.num_nodes(), 100 * m.mean, 100 * m.std));
    } catch (const std::exception& e) {
        return verdict(false, e.what());
    }
}

}  // namespace

int main() {
    const Regression reg = run_regression();
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"margin-ratio identity grid", identity_grid},
        {"optimal weights and scale invariance", weight_sanity},
        {"penalty/benefit bound", bound_check},
        {"JS divergence properties", js_properties},
        {"sampling distribution properties", sampling_properties},
        {"GCN gradient vs finite differences", gradient_correctness},
        {"flagging rule vs brute force", flagging_oracle},
        {"end-to-end defense regression", [&] { return defense_regression(reg); }},
        {"homophily augmentation", [&] { return homophily_gain(reg); }},
        {"ablation ordering vs AdaEdge", [&] { return ablation_order(reg); }},
        {"citation-graph clean accuracy", citation_check},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = verdict(false, std::string("threw: ") + e.what());
        }
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
        failures += o.verdict == Verdict::Fail ? 1 : 0;
        std::printf("%s  criterion %2zu  %-40s %s\n", tag, i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
