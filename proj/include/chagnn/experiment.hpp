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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chagnn/attack.hpp"
#include "chagnn/defense.hpp"
#include "chagnn/gcn.hpp"
#include "chagnn/synthetic.hpp"

namespace chagnn {

enum class AttackKind { None, Heuristic, Fga, Mga };
enum class DefenseKind { None, Chagnn, AdaEdge, Jaccard };

struct ExperimentConfig {
    // Exactly one data source: a dataset directory (fixed graph and splits for
    // every run) or a synthetic spec regenerated from each run's seed.
    std::optional<std::filesystem::path> dataset_path;
    bool largest_component = false;  // restrict a loaded dataset to its LCC
    SyntheticSpec synthetic;

    AttackKind attack = AttackKind::None;
    AttackBudget budget;
    // Injected nodes as a share of the original node count; overrides budget.num_inject.
    std::optional<double> inject_ratio;

    DefenseKind defense = DefenseKind::None;
    DefenseConfig defense_cfg;
    double jaccard_threshold = 0.01;

    TrainConfig train;
    std::size_t runs = 5;
    std::uint64_t master_seed = 0;
    std::optional<std::filesystem::path> export_poisoned;  // per-run subdirectories run_<i>

    void validate() const;  // throws ConfigError
    // Fully resolved form; every default is spelled out.
    nlohmann::json to_json() const;
    // Strict: unknown keys and wrong types raise ConfigError.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::filesystem::path& path);
};

struct RunOutcome {
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    std::size_t num_injected = 0;
    double clean_acc = 0;     // GCN trained on the clean graph
    double attacked_acc = 0;  // GCN retrained on the poisoned graph
    double final_acc = 0;     // after the defense (equals attacked_acc without one)
    double homophily_attacked = 0;
    double homophily_final = 0;
    std::vector<IterationRecord> history;
    std::vector<double> attack_loss;
    double wall_time = 0;
    std::string error;  // non-empty when the run failed
    enum class Failure { None, Config, Data, Other } failure = Failure::None;
};

struct MeanStd {
    double mean = 0;
    double std = 0;  // population standard deviation
};
MeanStd mean_std(std::span<const double> values);

struct ResultRecord {
    ExperimentConfig config;
    std::vector<RunOutcome> runs;
    MeanStd clean, attacked, final_acc;
    double wall_time = 0;

    bool ok() const;
    // {"config", "payload", "timing"}; only "timing" varies between identical runs.
    nlohmann::json to_json() const;
};

// Accuracies are measured on the original test nodes only.
RunOutcome run_single(const ExperimentConfig& cfg, std::size_t run_index);

// Runs indexed 0..runs-1 with seed master_seed + index on up to `jobs` threads.
// A failing run is recorded with its error; the others still complete.
ResultRecord run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1);

enum class SweepAxis { InjectRatio, EliminationRate };
SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepRow {
    SweepAxis axis;
    double value = 0;
    ResultRecord record;
};
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values,
                                std::size_t jobs = 1);

// Header: vary,value,runs,clean_mean,attacked_mean,final_mean,final_std
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace chagnn
