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

#include "chagnn/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <thread>

#include "chagnn/errors.hpp"

namespace chagnn {

namespace {

using json = nlohmann::json;

// Pulls typed fields out of one JSON object and rejects anything left over.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    void read(const std::string& key, T& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    const json& object(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

template <class Enum, std::size_t N>
Enum enum_from(const std::string& text, const std::pair<const char*, Enum> (&table)[N], const std::string& where) {
    for (const auto& [name, value] : table)
        if (text == name) return value;
    std::string allowed;
    for (const auto& [name, _] : table) allowed += std::string(allowed.empty() ? "" : ", ") + name;
    throw ConfigError(where + ": unknown value '" + text + "' (expected one of " + allowed + ")");
}

template <class Enum, std::size_t N>
std::string enum_name(Enum value, const std::pair<const char*, Enum> (&table)[N]) {
    for (const auto& [name, v] : table)
        if (v == value) return name;
    return "?";
}

constexpr std::pair<const char*, AttackKind> kAttackNames[] = {
    {"none", AttackKind::None}, {"heuristic", AttackKind::Heuristic}, {"fga", AttackKind::Fga}, {"mga", AttackKind::Mga}};
constexpr std::pair<const char*, DefenseKind> kDefenseNames[] = {{"none", DefenseKind::None},
                                                                  {"chagnn", DefenseKind::Chagnn},
                                                                  {"adaedge", DefenseKind::AdaEdge},
                                                                  {"jaccard", DefenseKind::Jaccard}};
constexpr std::pair<const char*, OptimizerKind> kOptimizerNames[] = {{"adam", OptimizerKind::Adam},
                                                                      {"sgd", OptimizerKind::Sgd}};
constexpr std::pair<const char*, GraphModel> kModelNames[] = {{"csbm", GraphModel::Csbm},
                                                               {"d_regular", GraphModel::DRegular}};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// JSON has no NaN; undefined ratios become null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double homophily_or_nan(const Dataset& ds) {
    try {
        return homophily_ratio(ds.graph, ds.labels);
    } catch (const UndefinedRatioError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

double test_accuracy(const Dataset& ds, const GcnParams& params) {
    const auto pred = pseudo_labels(gcn_forward(normalize_adjacency(ds.graph), ds.features, params));
    return accuracy(pred, ds.labels, ds.test_mask);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (runs < 1) throw ConfigError("config: runs must be >= 1");
    train.validate();
    defense_cfg.validate();
    if (inject_ratio && !(*inject_ratio >= 0.0 && std::isfinite(*inject_ratio)))
        throw ConfigError("config: inject_ratio must be a non-negative number");
    if (!dataset_path) {
        if (synthetic.num_classes < 2) throw ConfigError("config: synthetic.num_classes must be >= 2");
        if (synthetic.nodes_per_class < 1) throw ConfigError("config: synthetic.nodes_per_class must be >= 1");
        if (!(synthetic.homophily >= 0.0 && synthetic.homophily <= 1.0))
            throw ConfigError("config: synthetic.homophily must lie in [0, 1]");
        if (!(synthetic.feature_noise >= 0.0)) throw ConfigError("config: synthetic.feature_noise must be >= 0");
    }
    if (!(jaccard_threshold >= 0.0 && jaccard_threshold <= 1.0))
        throw ConfigError("config: jaccard_threshold must lie in [0, 1]");
}

json ExperimentConfig::to_json() const {
    json data;
    if (dataset_path) {
        data = {{"path", dataset_path->string()}, {"largest_component", largest_component}};
    } else {
        data = {{"synthetic",
                 {{"num_classes", synthetic.num_classes},
                  {"nodes_per_class", synthetic.nodes_per_class},
                  {"degree", synthetic.degree},
                  {"homophily", synthetic.homophily},
                  {"feature_strength", synthetic.feature_strength},
                  {"feature_noise", synthetic.feature_noise},
                  {"model", enum_name(synthetic.model, kModelNames)}}}};
    }
    json attack_j = {{"kind", enum_name(attack, kAttackNames)},
                     {"inject_degree", budget.inject_degree},
                     {"opt_iters", budget.opt_iters},
                     {"step_size", budget.step_size},
                     {"momentum", budget.momentum},
                     {"feature_min", optional_number(budget.feature_min)},
                     {"feature_max", optional_number(budget.feature_max)}};
    if (inject_ratio) {
        attack_j["inject_ratio"] = *inject_ratio;
    } else {
        attack_j["num_inject"] = budget.num_inject;
    }
    json j = {{"dataset", data},
              {"attack", attack_j},
              {"defense",
               {{"kind", enum_name(defense, kDefenseNames)},
                {"elimination_rate", defense_cfg.elimination_rate},
                {"max_iter", defense_cfg.max_iter},
                {"jaccard_threshold", jaccard_threshold}}},
              {"train",
               {{"learning_rate", train.learning_rate},
                {"max_epochs", train.max_epochs},
                {"weight_decay", train.weight_decay},
                {"hidden_dim", train.hidden_dim},
                {"patience", train.patience},
                {"fine_tune_epochs", train.fine_tune_epochs},
                {"optimizer", enum_name(train.optimizer, kOptimizerNames)}}},
              {"runs", runs},
              {"master_seed", master_seed}};
    j["export_poisoned"] = export_poisoned ? json(export_poisoned->string()) : json(nullptr);
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    ObjectReader top(j, "config");

    if (top.has("dataset")) {
        ObjectReader data(top.object("dataset"), "config.dataset");
        if (data.has("path") == data.has("synthetic"))
            throw ConfigError("config.dataset: give exactly one of 'path' or 'synthetic'");
        if (data.has("path")) {
            std::string path;
            data.read("path", path);
            cfg.dataset_path = path;
            data.read("largest_component", cfg.largest_component);
        } else {
            ObjectReader syn(data.object("synthetic"), "config.dataset.synthetic");
            auto& s = cfg.synthetic;
            syn.read("num_classes", s.num_classes);
            syn.read("nodes_per_class", s.nodes_per_class);
            syn.read("degree", s.degree);
            syn.read("homophily", s.homophily);
            syn.read("feature_strength", s.feature_strength);
            syn.read("feature_noise", s.feature_noise);
            std::string model = enum_name(s.model, kModelNames);
            syn.read("model", model);
            s.model = enum_from(model, kModelNames, "config.dataset.synthetic.model");
            syn.finish();
        }
        data.finish();
    }

    if (top.has("attack")) {
        ObjectReader at(top.object("attack"), "config.attack");
        std::string kind = "none";
        at.read("kind", kind);
        cfg.attack = enum_from(kind, kAttackNames, "config.attack.kind");
        if (at.has("inject_ratio") && at.has("num_inject"))
            throw ConfigError("config.attack: give at most one of 'inject_ratio' or 'num_inject'");
        if (at.has("inject_ratio")) {
            double ratio = 0;
            at.read("inject_ratio", ratio);
            cfg.inject_ratio = ratio;
        }
        at.read("num_inject", cfg.budget.num_inject);
        at.read("inject_degree", cfg.budget.inject_degree);
        at.read("opt_iters", cfg.budget.opt_iters);
        at.read("step_size", cfg.budget.step_size);
        at.read("momentum", cfg.budget.momentum);
        for (const char* key : {"feature_min", "feature_max"}) {
            if (!at.has(key)) continue;
            json raw;
            at.read(key, raw);
            auto& slot = std::string(key) == "feature_min" ? cfg.budget.feature_min : cfg.budget.feature_max;
            if (raw.is_null()) {
                slot.reset();
            } else if (raw.is_number()) {
                slot = raw.get<double>();
            } else {
                throw ConfigError(std::string("config.attack.") + key + ": expected a number or null");
            }
        }
        at.finish();
    }

    if (top.has("defense")) {
        ObjectReader de(top.object("defense"), "config.defense");
        std::string kind = "none";
        de.read("kind", kind);
        cfg.defense = enum_from(kind, kDefenseNames, "config.defense.kind");
        de.read("elimination_rate", cfg.defense_cfg.elimination_rate);
        de.read("max_iter", cfg.defense_cfg.max_iter);
        de.read("jaccard_threshold", cfg.jaccard_threshold);
        de.finish();
    }

    if (top.has("train")) {
        ObjectReader tr(top.object("train"), "config.train");
        auto& t = cfg.train;
        tr.read("learning_rate", t.learning_rate);
        tr.read("max_epochs", t.max_epochs);
        tr.read("weight_decay", t.weight_decay);
        tr.read("hidden_dim", t.hidden_dim);
        tr.read("patience", t.patience);
        tr.read("fine_tune_epochs", t.fine_tune_epochs);
        std::string opt = enum_name(t.optimizer, kOptimizerNames);
        tr.read("optimizer", opt);
        t.optimizer = enum_from(opt, kOptimizerNames, "config.train.optimizer");
        tr.finish();
    }

    top.read("runs", cfg.runs);
    top.read("master_seed", cfg.master_seed);
    if (top.has("export_poisoned")) {
        json raw;
        top.read("export_poisoned", raw);
        if (raw.is_string()) {
            cfg.export_poisoned = raw.get<std::string>();
        } else if (!raw.is_null()) {
            throw ConfigError("config.export_poisoned: expected a path or null");
        }
    }
    top.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    if (values.empty()) return out;
    double sum = 0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    double sq = 0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size()));
    return out;
}

RunOutcome run_single(const ExperimentConfig& cfg, std::size_t run_index) {
    const auto started = std::chrono::steady_clock::now();
    RunOutcome out;
    out.run_index = run_index;
    out.seed = cfg.master_seed + run_index;
    const std::uint64_t seed = out.seed;

    Dataset ds;
    if (cfg.dataset_path) {
        ds = load_dataset(*cfg.dataset_path);
        if (cfg.largest_component) ds = largest_connected_component(ds);
    } else {
        ds = generate_synthetic(cfg.synthetic, seed);
    }

    const auto clean = train(ds, cfg.train, seed);
    out.clean_acc = test_accuracy(ds, clean.params);

    AttackBudget budget = cfg.budget;
    if (cfg.inject_ratio)
        budget.num_inject = static_cast<std::size_t>(std::llround(*cfg.inject_ratio * static_cast<double>(ds.num_nodes())));

    PoisonedDataset poisoned;
    if (cfg.attack == AttackKind::None || budget.num_inject == 0) {
        poisoned.base = ds;
        poisoned.merged = ds;
    } else {
        AttackLog log;
        switch (cfg.attack) {
            case AttackKind::Heuristic: poisoned = heuristic_inject(ds, budget, seed); break;
            case AttackKind::Fga: poisoned = fga_inject(ds, budget, clean.params, seed, &log); break;
            case AttackKind::Mga: poisoned = mga_inject(ds, budget, clean.params, seed, &log); break;
            case AttackKind::None: break;
        }
        out.attack_loss = log.loss;
    }
    out.num_injected = poisoned.injected_ids.size();
    if (cfg.export_poisoned) save_poisoned(poisoned, *cfg.export_poisoned / ("run_" + std::to_string(run_index)));

    const Dataset& merged = poisoned.merged;
    const auto attacked = out.num_injected == 0 ? clean : train(merged, cfg.train, seed);
    out.attacked_acc = test_accuracy(merged, attacked.params);
    out.homophily_attacked = homophily_or_nan(merged);

    switch (cfg.defense) {
        case DefenseKind::None:
            out.final_acc = out.attacked_acc;
            out.homophily_final = out.homophily_attacked;
            break;
        case DefenseKind::Chagnn: {
            const auto res = chagnn_run(merged, modified_node_set(poisoned), cfg.defense_cfg, cfg.train, seed);
            out.final_acc = test_accuracy(res.cleaned, res.params);
            out.homophily_final = homophily_or_nan(res.cleaned);
            out.history = res.history;
            break;
        }
        case DefenseKind::AdaEdge: {
            const auto pseudo =
                pseudo_labels(gcn_forward(normalize_adjacency(merged.graph), merged.features, attacked.params));
            const Dataset cleaned = baseline_adaedge(merged, modified_node_set(poisoned), pseudo);
            const auto tuned = fine_tune(attacked.params, cleaned, cfg.train);
            out.final_acc = test_accuracy(cleaned, tuned.params);
            out.homophily_final = homophily_or_nan(cleaned);
            break;
        }
        case DefenseKind::Jaccard: {
            const Dataset cleaned = baseline_jaccard(merged, cfg.jaccard_threshold);
            const auto model = train(cleaned, cfg.train, seed);
            out.final_acc = test_accuracy(cleaned, model.params);
            out.homophily_final = homophily_or_nan(cleaned);
            break;
        }
    }
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

bool ResultRecord::ok() const {
    for (const auto& r : runs)
        if (!r.error.empty()) return false;
    return !runs.empty();
}

json ResultRecord::to_json() const {
    json run_rows = json::array();
    json run_times = json::array();
    for (const auto& r : runs) {
        json row = {{"run", r.run_index}, {"seed", r.seed}};
        if (!r.error.empty()) {
            row["error"] = r.error;
        } else {
            json hist = json::array();
            for (const auto& h : r.history) {
                hist.push_back({{"iter", h.iter},
                                {"removed", h.removed},
                                {"he_size", h.he_size},
                                {"val_acc", h.val_acc},
                                {"test_acc", h.test_acc},
                                {"homophily", number_or_null(h.homophily)}});
            }
            row["num_injected"] = r.num_injected;
            row["clean_acc"] = r.clean_acc;
            row["attacked_acc"] = r.attacked_acc;
            row["final_acc"] = r.final_acc;
            row["homophily_attacked"] = number_or_null(r.homophily_attacked);
            row["homophily_final"] = number_or_null(r.homophily_final);
            row["attack_loss"] = r.attack_loss;
            row["history"] = std::move(hist);
        }
        run_rows.push_back(std::move(row));
        run_times.push_back(r.wall_time);
    }
    auto cell = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; };
    return {{"config", config.to_json()},
            {"payload",
             {{"runs", run_rows},
              {"clean", cell(clean)},
              {"attacked", cell(attacked)},
              {"final", cell(final_acc)},
              {"ok", ok()}}},
            {"timing", {{"wall_time", wall_time}, {"run_wall_time", run_times}}}};
}

ResultRecord run_experiment(const ExperimentConfig& cfg, std::size_t jobs) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    ResultRecord rec;
    rec.config = cfg;
    rec.runs.resize(cfg.runs);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.runs; i = next++) {
            auto fail = [&](const std::exception& e, RunOutcome::Failure kind) {
                rec.runs[i] = RunOutcome{};
                rec.runs[i].run_index = i;
                rec.runs[i].seed = cfg.master_seed + i;
                rec.runs[i].error = e.what();
                rec.runs[i].failure = kind;
            };
            try {
                rec.runs[i] = run_single(cfg, i);
            } catch (const ConfigError& e) {
                fail(e, RunOutcome::Failure::Config);
            } catch (const FormatError& e) {
                fail(e, RunOutcome::Failure::Data);
            } catch (const InputError& e) {
                fail(e, RunOutcome::Failure::Data);
            } catch (const std::exception& e) {
                fail(e, RunOutcome::Failure::Other);
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, cfg.runs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    std::vector<double> clean, attacked, final_acc;
    for (const auto& r : rec.runs) {
        if (!r.error.empty()) continue;
        clean.push_back(r.clean_acc);
        attacked.push_back(r.attacked_acc);
        final_acc.push_back(r.final_acc);
    }
    rec.clean = mean_std(clean);
    rec.attacked = mean_std(attacked);
    rec.final_acc = mean_std(final_acc);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "inject_ratio") return SweepAxis::InjectRatio;
    if (name == "elimination_rate" || name == "q") return SweepAxis::EliminationRate;
    throw ConfigError("sweep: unknown axis '" + name + "' (expected inject_ratio or elimination_rate)");
}

std::string sweep_axis_name(SweepAxis axis) {
    return axis == SweepAxis::InjectRatio ? "inject_ratio" : "elimination_rate";
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values,
                                std::size_t jobs) {
    if (values.empty()) throw ConfigError("sweep: no values given");
    std::vector<SweepRow> rows;
    for (double v : values) {
        ExperimentConfig c = cfg;
        if (axis == SweepAxis::InjectRatio) {
            c.inject_ratio = v;
        } else {
            c.defense_cfg.elimination_rate = v;
        }
        rows.push_back({axis, v, run_experiment(c, jobs)});
    }
    return rows;
}

namespace {

// Shortest text that reads back to the same double.
std::string real_text(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::string out = "vary,value,runs,clean_mean,attacked_mean,final_mean,final_std\n";
    for (const auto& r : rows) {
        out += sweep_axis_name(r.axis) + ',' + real_text(r.value) + ',' + std::to_string(r.record.runs.size()) + ',' +
               real_text(r.record.clean.mean) + ',' + real_text(r.record.attacked.mean) + ',' +
               real_text(r.record.final_acc.mean) + ',' + real_text(r.record.final_acc.std) + '\n';
    }
    return out;
}

}  // namespace chagnn
