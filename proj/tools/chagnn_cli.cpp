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

// Command-line front end: synth, run, sweep, verify-theorems.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage error,
// 3 data error, 4 a verification check failed.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chagnn/errors.hpp"
#include "chagnn/experiment.hpp"
#include "chagnn/synthetic.hpp"
#include "chagnn/theory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCheckFailed = 4;

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw chagnn::InputError("cannot write " + path.string());
    out << text;
    if (!out) throw chagnn::InputError("failed writing " + path.string());
}

int exit_code_for(const chagnn::ResultRecord& rec) {
    int code = kExitOk;
    for (const auto& r : rec.runs) {
        switch (r.failure) {
            case chagnn::RunOutcome::Failure::None: break;
            case chagnn::RunOutcome::Failure::Config: return kExitConfig;
            case chagnn::RunOutcome::Failure::Data: code = kExitData; break;
            case chagnn::RunOutcome::Failure::Other: code = code == kExitOk ? kExitOther : code; break;
        }
    }
    return code;
}

void report_failures(const chagnn::ResultRecord& rec) {
    for (const auto& r : rec.runs)
        if (!r.error.empty()) std::cerr << "run " << r.run_index << " failed: " << r.error << '\n';
}

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::size_t jobs = 1;
    std::string out;
};

chagnn::ExperimentConfig load_config(const CommonOptions& o) {
    auto cfg = chagnn::ExperimentConfig::from_file(o.config);
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.runs) cfg.runs = *o.runs;
    cfg.validate();
    return cfg;
}

int cmd_synth(const std::string& config, std::uint64_t seed, const std::string& out_dir,
              const chagnn::SyntheticSpec& overrides, const CLI::App& sub) {
    chagnn::SyntheticSpec spec;
    if (!config.empty()) spec = chagnn::ExperimentConfig::from_file(config).synthetic;
    if (sub.count("--classes")) spec.num_classes = overrides.num_classes;
    if (sub.count("--nodes-per-class")) spec.nodes_per_class = overrides.nodes_per_class;
    if (sub.count("--degree")) spec.degree = overrides.degree;
    if (sub.count("--homophily")) spec.homophily = overrides.homophily;
    if (sub.count("--feature-strength")) spec.feature_strength = overrides.feature_strength;
    if (sub.count("--feature-noise")) spec.feature_noise = overrides.feature_noise;
    if (sub.count("--model")) spec.model = overrides.model;
    const auto ds = chagnn::generate_synthetic(spec, seed);
    chagnn::save_dataset(ds, out_dir);
    std::cout << "wrote " << ds.num_nodes() << " nodes, " << ds.graph.num_edges() << " edges to " << out_dir << '\n';
    return kExitOk;
}

int cmd_run(const CommonOptions& o) {
    const auto cfg = load_config(o);
    const auto rec = chagnn::run_experiment(cfg, o.jobs);
    const std::string text = rec.to_json().dump(2) + "\n";
    if (!o.out.empty()) write_text(o.out, text);
    std::cout << text;
    report_failures(rec);
    return exit_code_for(rec);
}

int cmd_sweep(const CommonOptions& o, const std::string& vary, const std::vector<double>& values) {
    const auto cfg = load_config(o);
    const auto axis = chagnn::parse_sweep_axis(vary);
    const auto rows = chagnn::run_sweep(cfg, axis, values, o.jobs);
    const std::string csv = chagnn::sweep_csv(rows);
    if (!o.out.empty()) write_text(o.out, csv);
    std::cout << csv;
    int code = kExitOk;
    for (const auto& r : rows) {
        report_failures(r.record);
        if (code == kExitOk) code = exit_code_for(r.record);
    }
    return code;
}

struct TheoremOptions {
    double tolerance = chagnn::kTheorem1Tolerance;
    std::vector<std::size_t> classes{2, 3, 5};
    std::vector<std::size_t> same{2, 3, 4, 5, 6};
    std::vector<std::size_t> injected{1, 2, 4};
    std::vector<double> accuracies{0.6, 0.7, 0.8, 0.9};
    std::vector<std::size_t> bound_injected{1, 4};
    std::size_t samples = 100000;
    double weight_scale = 1.0;
    double feature_strength = 1.0;
    bool degenerate_only = false;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_verify(const TheoremOptions& o) {
    if (!(o.tolerance > 0.0)) throw chagnn::ConfigError("--tolerance must be positive");
    chagnn::Theorem1Grid grid;
    grid.classes = o.classes;
    grid.same = o.same;
    grid.injected = o.injected;
    grid.weight_scale = o.weight_scale;
    grid.feature_strength = o.feature_strength;
    grid.degenerate_only = o.degenerate_only;
    const auto points = chagnn::theorem1_grid(grid, o.seed, o.tolerance);

    std::vector<chagnn::BoundReport> bounds;
    if (!o.degenerate_only) {
        std::uint64_t split = 0;
        for (double p : o.accuracies) {
            for (std::size_t l : o.bound_injected) {
                chagnn::TheoremScenario sc;
                sc.num_classes = 2;
                sc.same_class_edges = 3;
                sc.other_class_edges = 1;
                sc.degree = 4;
                sc.injected_edges = l;
                bounds.push_back(chagnn::theorem2_check(sc, p, o.samples, o.seed + split++));
            }
        }
    }
    const auto report = chagnn::theorem_report_json(points, bounds);
    const std::string text = report.dump(2) + "\n";
    if (!o.out.empty()) write_text(o.out, text);
    std::cout << text;
    return report.at("pass").get<bool>() ? kExitOk : kExitCheckFailed;
}

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the master seed");
    sub->add_option("--runs", o.runs, "Override the number of runs")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", o.jobs, "Parallel runs")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph injection attacks and heterophily-aware edge cleaning for GCNs"};
    app.require_subcommand(1);

    // synth
    std::string synth_config, synth_out;
    std::uint64_t synth_seed = 0;
    chagnn::SyntheticSpec synth_spec;
    std::string synth_model = "csbm";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset directory");
    synth->add_option("--config", synth_config, "Experiment config whose synthetic spec is used")
        ->check(CLI::ExistingFile);
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--classes", synth_spec.num_classes);
    synth->add_option("--nodes-per-class", synth_spec.nodes_per_class);
    synth->add_option("--degree", synth_spec.degree);
    synth->add_option("--homophily", synth_spec.homophily);
    synth->add_option("--feature-strength", synth_spec.feature_strength);
    synth->add_option("--feature-noise", synth_spec.feature_noise);
    synth->add_option("--model", synth_model)->check(CLI::IsMember({"csbm", "d_regular"}));

    // run
    CommonOptions run_opts;
    auto* run = app.add_subcommand("run", "Train, attack, defend and evaluate");
    add_common(run, run_opts);
    run->add_option("--out", run_opts.out, "Results JSON file");

    // sweep
    CommonOptions sweep_opts;
    std::string vary;
    std::vector<double> values;
    auto* sweep = app.add_subcommand("sweep", "Repeat an experiment over a list of values");
    add_common(sweep, sweep_opts);
    sweep->add_option("--out", sweep_opts.out, "Output CSV file");
    sweep->add_option("--vary", vary, "inject_ratio or elimination_rate")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');

    // verify-theorems
    TheoremOptions th;
    auto* verify = app.add_subcommand("verify-theorems", "Numerically check the margin identity and the penalty bound");
    verify->add_option("--tolerance", th.tolerance, "Absolute tolerance on ratio deltas");
    verify->add_option("--classes", th.classes)->delimiter(',');
    verify->add_option("--same", th.same, "Same-class counts a")->delimiter(',');
    verify->add_option("--injected", th.injected, "Injected edge counts l")->delimiter(',');
    verify->add_option("--accuracies", th.accuracies, "Pseudo-label accuracies for the bound")->delimiter(',');
    verify->add_option("--samples", th.samples, "Monte Carlo samples per bound check");
    verify->add_option("--weight-scale", th.weight_scale);
    verify->add_option("--feature-strength", th.feature_strength);
    verify->add_flag("--degenerate-only", th.degenerate_only, "Only a == b grid points (all skipped)");
    verify->add_option("--seed", th.seed);
    verify->add_option("--out", th.out, "Report JSON file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synth->parsed()) {
            synth_spec.model = synth_model == "d_regular" ? chagnn::GraphModel::DRegular : chagnn::GraphModel::Csbm;
            return cmd_synth(synth_config, synth_seed, synth_out, synth_spec, *synth);
        }
        if (run->parsed()) return cmd_run(run_opts);
        if (sweep->parsed()) return cmd_sweep(sweep_opts, vary, values);
        if (verify->parsed()) return cmd_verify(th);
    } catch (const chagnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const chagnn::FormatError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const chagnn::InputError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}
