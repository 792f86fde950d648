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
#include <span>
#include <vector>

#include "chagnn/dataset.hpp"
#include "chagnn/graph.hpp"

namespace chagnn {

// Two-layer GCN: softmax(Â · relu(Â X W1) · W2).
struct GcnParams {
    Matrix w1;  // D x H
    Matrix w2;  // H x C

    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(w1.rows()); }
    std::size_t hidden_dim() const noexcept { return static_cast<std::size_t>(w1.cols()); }
    std::size_t num_classes() const noexcept { return static_cast<std::size_t>(w2.cols()); }
    bool operator==(const GcnParams& other) const;
};

// Two-hop linear model: softmax(Â² X W).
struct SgcParams {
    Matrix w;  // D x C
};

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t max_epochs = 200;
    double weight_decay = 5e-4;
    std::size_t hidden_dim = 16;
    std::size_t patience = 30;
    std::size_t fine_tune_epochs = 50;
    OptimizerKind optimizer = OptimizerKind::Adam;

    void validate() const;  // throws ConfigError
};

// Row-stochastic class probabilities, one row per node.
struct SoftLabelMatrix {
    Matrix probs;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(probs.rows()); }
    std::span<const double> row(std::size_t i) const {
        return {probs.data() + i * static_cast<std::size_t>(probs.cols()), static_cast<std::size_t>(probs.cols())};
    }
};

// Intermediate values of one GCN forward pass, kept for backpropagation.
struct GcnTrace {
    Matrix ax;      // Â X
    Matrix pre;     // Â X W1
    Matrix hidden;  // relu(pre)
    Matrix hw;      // hidden W2
    Matrix logits;  // Â hidden W2
    Matrix probs;   // softmax(logits)
};

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

GcnTrace gcn_trace(const NormalizedAdjacency& adj, const Matrix& ax, const GcnParams& params);
SoftLabelMatrix gcn_forward(const NormalizedAdjacency& adj, const Matrix& x, const GcnParams& params);

struct SgcOutput {
    Matrix logits;  // Â² X W
    SoftLabelMatrix soft;
};
SgcOutput sgc_forward(const NormalizedAdjacency& adj, const Matrix& x, const SgcParams& params);

// Classification margin: z[y] - max_{j != y} z[j]. Needs at least two classes.
double cm_loss(std::span<const double> z, int true_class);

// Row-wise argmax; ties resolve to the lowest class index.
std::vector<int> pseudo_labels(const SoftLabelMatrix& soft);

// Fraction of masked nodes with pred == label. Throws InputError on an empty mask.
double accuracy(std::span<const int> pred, std::span<const int> labels, const std::vector<bool>& mask);

// Mean of -log(max(p[y], 1e-12)) over `nodes`, and optionally its gradient with
// respect to the logits (rows outside `nodes` stay zero).
double cross_entropy(const Matrix& probs, std::span<const int> labels, std::span<const NodeId> nodes,
                     Matrix* grad_logits = nullptr);

struct GcnGradient {
    Matrix w1;
    Matrix w2;
};

// Backpropagates dLoss/dlogits through the GCN (requires symmetric Â).
// Optionally also returns dLoss/dpre, the gradient at the first-layer pre-activation.
GcnGradient gcn_backward(const NormalizedAdjacency& adj, const GcnTrace& trace, const GcnParams& params,
                         const Matrix& grad_logits, Matrix* grad_pre = nullptr);

// Training objective: mean cross-entropy over the train nodes plus
// (weight_decay / 2) * (|W1|² + |W2|²).
double training_loss(const Dataset& ds, const GcnParams& params, double weight_decay);
double training_loss_and_gradient(const Dataset& ds, const GcnParams& params, double weight_decay,
                                  GcnGradient& grad);

// Glorot-uniform initialization, deterministic in seed.
GcnParams init_gcn_params(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes,
                          std::uint64_t seed);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    GcnParams params;  // best-validation checkpoint
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
};

// Full-batch training from a fresh initialization. Each history entry scores the
// parameters after that epoch's update. Stops once the validation loss has not
// improved for `patience` epochs. Throws InputError without train nodes.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, std::uint64_t seed);

// Continues from `params` for cfg.fine_tune_epochs epochs with a fresh optimizer
// state. The starting point is itself a checkpoint candidate, so the returned
// validation loss never exceeds the input's.
TrainResult fine_tune(const GcnParams& params, const Dataset& ds, const TrainConfig& cfg);

// Largest coordinate-wise relative error between the backprop gradient of
// training_loss and central finite differences with step epsilon. Denominators
// are floored at 1e-5.
double gradient_check(const Dataset& ds, const GcnParams& params, double epsilon, double weight_decay = 0.0);

// SGC training objective (mean cross-entropy over `nodes`) and its gradient
// obtained by backpropagating through Â twice.
double sgc_loss_and_gradient(const NormalizedAdjacency& adj, const Matrix& x, std::span<const int> labels,
                             std::span<const NodeId> nodes, const SgcParams& params, Matrix& grad_w);

// JSON checkpoint: {"format": "chagnn-gcn-v1", "shape": {"D","H","C"}, "w1": [...], "w2": [...]}
// with row-major weights; doubles are written in round-trip form.
void save_params(const GcnParams& params, const std::filesystem::path& path);
GcnParams load_params(const std::filesystem::path& path);

}  // namespace chagnn
