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

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "chagnn/errors.hpp"
#include "chagnn/gcn.hpp"

namespace chagnn {

namespace {

// Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) or plain gradient descent.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double lr, const GcnParams& shape) : kind_(kind), lr_(lr) {
        m1_ = Matrix::Zero(shape.w1.rows(), shape.w1.cols());
        v1_ = m1_;
        m2_ = Matrix::Zero(shape.w2.rows(), shape.w2.cols());
        v2_ = m2_;
    }

    void step(GcnParams& params, const GcnGradient& grad) {
        if (kind_ == OptimizerKind::Sgd) {
            params.w1 -= lr_ * grad.w1;
            params.w2 -= lr_ * grad.w2;
            return;
        }
        ++t_;
        update(params.w1, grad.w1, m1_, v1_);
        update(params.w2, grad.w2, m2_, v2_);
    }

private:
    void update(Matrix& w, const Matrix& g, Matrix& m, Matrix& v) const {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        w.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }

    OptimizerKind kind_;
    double lr_;
    long t_ = 0;
    Matrix m1_, v1_, m2_, v2_;
};

struct Evaluation {
    double train_loss = 0.0;  // includes weight decay
    double val_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    GcnGradient grad;
};

class Trainer {
public:
    Trainer(const Dataset& ds, const TrainConfig& cfg)
        : ds_(ds),
          cfg_(cfg),
          adj_(normalize_adjacency(ds.graph)),
          ax_(spmm(adj_, ds.features)),
          train_nodes_(ds.train_nodes()),
          val_nodes_(ds.val_nodes()) {
        cfg.validate();
        if (train_nodes_.empty()) throw InputError("train: dataset has no training nodes");
    }

    Evaluation evaluate(const GcnParams& params) const {
        const auto trace = gcn_trace(adj_, ax_, params);
        Evaluation e;
        Matrix dz;
        e.train_loss = cross_entropy(trace.probs, ds_.labels, train_nodes_, &dz) +
                       0.5 * cfg_.weight_decay * (params.w1.squaredNorm() + params.w2.squaredNorm());
        e.grad = gcn_backward(adj_, trace, params, dz);
        e.grad.w1 += cfg_.weight_decay * params.w1;
        e.grad.w2 += cfg_.weight_decay * params.w2;

        const auto pred = pseudo_labels(SoftLabelMatrix{trace.probs});
        e.train_acc = accuracy(pred, ds_.labels, ds_.train_mask);
        if (val_nodes_.empty()) {
            e.val_loss = e.train_loss;
            e.val_acc = e.train_acc;
        } else {
            e.val_loss = cross_entropy(trace.probs, ds_.labels, val_nodes_);
            e.val_acc = accuracy(pred, ds_.labels, ds_.val_mask);
        }
        return e;
    }

    // Runs up to `epochs` updates from `start`. When `early_stop` is set, stops
    // after `patience` epochs without validation improvement.
    TrainResult run(GcnParams start, std::size_t epochs, bool early_stop, bool start_is_candidate) const {
        TrainResult result;
        GcnParams params = std::move(start);
        Optimizer opt(cfg_.optimizer, cfg_.learning_rate, params);
        Evaluation current = evaluate(params);

        double best_val = std::numeric_limits<double>::infinity();
        if (start_is_candidate) {
            best_val = current.val_loss;
            result.params = params;
            result.best_epoch = 0;
        }
        std::size_t since_best = 0;
        for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
            opt.step(params, current.grad);
            current = evaluate(params);
            result.history.push_back({epoch, current.train_loss, current.val_loss, current.train_acc, current.val_acc});
            if (current.val_loss < best_val) {
                best_val = current.val_loss;
                result.params = params;
                result.best_epoch = epoch;
                since_best = 0;
            } else if (early_stop && ++since_best >= cfg_.patience) {
                break;
            }
        }
        if (result.params.w1.size() == 0) result.params = params;
        return result;
    }

private:
    const Dataset& ds_;
    TrainConfig cfg_;
    NormalizedAdjacency adj_;
    Matrix ax_;
    std::vector<NodeId> train_nodes_;
    std::vector<NodeId> val_nodes_;
};

}  // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg, std::uint64_t seed) {
    Trainer trainer(ds, cfg);
    auto init = init_gcn_params(ds.num_features(), cfg.hidden_dim, static_cast<std::size_t>(ds.num_classes), seed);
    return trainer.run(std::move(init), cfg.max_epochs, cfg.patience > 0, false);
}

TrainResult fine_tune(const GcnParams& params, const Dataset& ds, const TrainConfig& cfg) {
    if (params.input_dim() != ds.num_features() || params.num_classes() != static_cast<std::size_t>(ds.num_classes))
        throw InputError("fine_tune: parameters are " + std::to_string(params.input_dim()) + "->" +
                         std::to_string(params.num_classes()) + " but dataset is " +
                         std::to_string(ds.num_features()) + "->" + std::to_string(ds.num_classes));
    Trainer trainer(ds, cfg);
    return trainer.run(params, cfg.fine_tune_epochs, false, true);
}

// =============================================================================
// Checkpoints
// =============================================================================

namespace {

nlohmann::json flatten(const Matrix& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    }
    return arr;
}

Matrix unflatten(const nlohmann::json& arr, std::size_t rows, std::size_t cols, const std::string& file) {
    if (!arr.is_array() || arr.size() != rows * cols)
        throw FormatError(file, 0, "weight array does not match the shape header");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = arr[k++].get<double>();
    }
    return m;
}

}  // namespace

void save_params(const GcnParams& params, const std::filesystem::path& path) {
    nlohmann::json doc = {
        {"format", "chagnn-gcn-v1"},
        {"shape", {{"D", params.input_dim()}, {"H", params.hidden_dim()}, {"C", params.num_classes()}}},
        {"w1", flatten(params.w1)},
        {"w2", flatten(params.w2)},
    };
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << doc.dump() << '\n';
}

GcnParams load_params(const std::filesystem::path& path) {
    const std::string file = path.filename().string();
    std::ifstream in(path);
    if (!in) throw FormatError(file, 0, "cannot open file");
    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.at("format").get<std::string>() != "chagnn-gcn-v1") throw FormatError(file, 0, "unknown format tag");
        const auto& shape = doc.at("shape");
        const auto d = shape.at("D").get<std::size_t>();
        const auto h = shape.at("H").get<std::size_t>();
        const auto c = shape.at("C").get<std::size_t>();
        GcnParams p;
        p.w1 = unflatten(doc.at("w1"), d, h, file);
        p.w2 = unflatten(doc.at("w2"), h, c, file);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(file, 0, e.what());
    }
}

}  // namespace chagnn
