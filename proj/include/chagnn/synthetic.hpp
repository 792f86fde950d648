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
#include <random>
#include <span>
#include <vector>

#include "chagnn/dataset.hpp"

namespace chagnn {

enum class GraphModel {
    DRegular,  // every node has exactly `degree` edges, a fixed share inside its class
    Csbm,      // independent edges with block probabilities matching `degree` and `homophily` in expectation
};

struct SyntheticSpec {
    int num_classes = 3;
    std::size_t nodes_per_class = 100;
    std::size_t degree = 10;
    double homophily = 0.8;
    // Feature row of a class-c node: feature_strength * onehot(c) + (1 - feature_strength) / C.
    double feature_strength = 0.9;
    GraphModel model = GraphModel::Csbm;
    // Standard deviation of i.i.d. Gaussian noise added to every feature; 0 keeps
    // the rows exactly on the class template.
    double feature_noise = 0.0;
};

// Deterministic in (spec, seed). Node i has label i % C. Masks are a
// class-stratified 10% / 10% / 80% train/val/test split.
// Throws ConfigError when the spec cannot be realized (see README for the
// d-regular feasibility rules).
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Per class: shuffle, take round(train_frac * n_c) for train, round(val_frac * n_c)
// for validation, the rest for test. Nodes with unknown labels go to no split.
void assign_stratified_split(Dataset& ds, double train_frac, double val_frac, std::mt19937_64& rng);

}  // namespace chagnn
