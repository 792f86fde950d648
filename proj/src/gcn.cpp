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

#include "chagnn/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "chagnn/errors.hpp"

namespace chagnn {

namespace {

constexpr double kLogFloor = 1e-12;

void check_rows(const NormalizedAdjacency& adj, const Matrix& x) {
    if (static_cast<std::size_t>(x.rows()) != adj.num_nodes)
        throw InputError("forward: feature rows (" + std::to_string(x.rows()) + ") differ from node count (" +
                         std::to_string(adj.num_nodes) + ")");
}

}  // namespace

bool GcnParams::operator==(const GcnParams& other) const {
    return w1.rows() == other.w1.rows() && w1.cols() == other.w1.cols() && w2.rows() == other.w2.rows() &&
           w2.cols() == other.w2.cols() && w1 == other.w1 && w2 == other.w2;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (hidden_dim < 1) throw ConfigError("train: hidden_dim must be >= 1");
    if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix probs(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double top = logits.row(i).maxCoeff();
        probs.row(i) = (logits.row(i).array() - top).exp();
        probs.row(i) /= probs.row(i).sum();
    }
    return probs;
}

GcnTrace gcn_trace(const NormalizedAdjacency& adj, const Matrix& ax, const GcnParams& params) {
    check_rows(adj, ax);
    if (ax.cols() != params.w1.rows())
        throw InputError("gcn: feature dimension " + std::to_string(ax.cols()) + " does not match W1 rows " +
                         std::to_string(params.w1.rows()));
    if (params.w1.cols() != params.w2.rows()) throw InputError("gcn: W1 columns do not match W2 rows");

    GcnTrace t;
    t.ax = ax;
    t.pre = ax * params.w1;
    t.hidden = t.pre.cwiseMax(0.0);
    t.hw = t.hidden * params.w2;
    t.logits = spmm(adj, t.hw);
    t.probs = softmax_rows(t.logits);
    return t;
}

SoftLabelMatrix gcn_forward(const NormalizedAdjacency& adj, const Matrix& x, const GcnParams& params) {
    check_rows(adj, x);
    return {gcn_trace(adj, spmm(adj, x), params).probs};
}

SgcOutput sgc_forward(const NormalizedAdjacency& adj, const Matrix& x, const SgcParams& params) {
    check_rows(adj, x);
    if (x.cols() != params.w.rows()) throw InputError("sgc: feature dimension does not match W rows");
    SgcOutput out;
    out.logits = spmm(adj, spmm(adj, x)) * params.w;
    out.soft.probs = softmax_rows(out.logits);
    return out;
}

double cm_loss(std::span<const double> z, int true_class) {
    if (z.size() < 2) throw InputError("cm_loss: needs at least two classes");
    if (true_class < 0 || static_cast<std::size_t>(true_class) >= z.size())
        throw InputError("cm_loss: class index out of range");
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (static_cast<int>(j) != true_class) best_other = std::max(best_other, z[j]);
    }
    return z[static_cast<std::size_t>(true_class)] - best_other;
}

std::vector<int> pseudo_labels(const SoftLabelMatrix& soft) {
    std::vector<int> out(soft.rows());
    for (std::size_t i = 0; i < soft.rows(); ++i) {
        auto row = soft.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

double accuracy(std::span<const int> pred, std::span<const int> labels, const std::vector<bool>& mask) {
    std::size_t total = 0, correct = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++total;
        if (pred[i] == labels[i]) ++correct;
    }
    if (total == 0) throw InputError("accuracy: empty mask");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double cross_entropy(const Matrix& probs, std::span<const int> labels, std::span<const NodeId> nodes,
                     Matrix* grad_logits) {
    if (nodes.empty()) throw InputError("cross_entropy: no nodes");
    const double scale = 1.0 / static_cast<double>(nodes.size());
    if (grad_logits) *grad_logits = Matrix::Zero(probs.rows(), probs.cols());
    double loss = 0.0;
    for (NodeId v : nodes) {
        const int y = labels[v];
        if (y < 0 || y >= probs.cols()) throw InputError("cross_entropy: node without a valid label");
        loss -= std::log(std::max(probs(v, y), kLogFloor));
        if (grad_logits) {
            grad_logits->row(v) = probs.row(v) * scale;
            (*grad_logits)(v, y) -= scale;
        }
    }
    return loss * scale;
}

GcnGradient gcn_backward(const NormalizedAdjacency& adj, const GcnTrace& trace, const GcnParams& params,
                         const Matrix& grad_logits, Matrix* grad_pre) {
    const Matrix grad_hw = spmm(adj, grad_logits);  // Â is symmetric
    GcnGradient g;
    g.w2 = trace.hidden.transpose() * grad_hw;
    Matrix grad_hidden = grad_hw * params.w2.transpose();
    Matrix dpre = (trace.pre.array() > 0.0).select(grad_hidden, 0.0);
    g.w1 = trace.ax.transpose() * dpre;
    if (grad_pre) *grad_pre = std::move(dpre);
    return g;
}

namespace {

double decay_term(const GcnParams& params, double weight_decay) {
    return 0.5 * weight_decay * (params.w1.squaredNorm() + params.w2.squaredNorm());
}

}  // namespace

double training_loss(const Dataset& ds, const GcnParams& params, double weight_decay) {
    const auto adj = normalize_adjacency(ds.graph);
    const auto trace = gcn_trace(adj, spmm(adj, ds.features), params);
    return cross_entropy(trace.probs, ds.labels, ds.train_nodes()) + decay_term(params, weight_decay);
}

double training_loss_and_gradient(const Dataset& ds, const GcnParams& params, double weight_decay,
                                  GcnGradient& grad) {
    const auto adj = normalize_adjacency(ds.graph);
    const auto trace = gcn_trace(adj, spmm(adj, ds.features), params);
    Matrix dz;
    const double loss = cross_entropy(trace.probs, ds.labels, ds.train_nodes(), &dz);
    grad = gcn_backward(adj, trace, params, dz);
    grad.w1 += weight_decay * params.w1;
    grad.w2 += weight_decay * params.w2;
    return loss + decay_term(params, weight_decay);
}

double gradient_check(const Dataset& ds, const GcnParams& params, double epsilon, double weight_decay) {
    GcnGradient analytic;
    training_loss_and_gradient(ds, params, weight_decay, analytic);

    double worst = 0.0;
    GcnParams probe = params;
    auto check_matrix = [&](Matrix& w, const Matrix& g) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                const double saved = w(i, j);
                w(i, j) = saved + epsilon;
                const double up = training_loss(ds, probe, weight_decay);
                w(i, j) = saved - epsilon;
                const double down = training_loss(ds, probe, weight_decay);
                w(i, j) = saved;
                const double numeric = (up - down) / (2.0 * epsilon);
                const double denom = std::max({std::abs(numeric), std::abs(g(i, j)), 1e-5});
                worst = std::max(worst, std::abs(numeric - g(i, j)) / denom);
            }
        }
    };
    check_matrix(probe.w1, analytic.w1);
    check_matrix(probe.w2, analytic.w2);
    return worst;
}

double sgc_loss_and_gradient(const NormalizedAdjacency& adj, const Matrix& x, std::span<const int> labels,
                             std::span<const NodeId> nodes, const SgcParams& params, Matrix& grad_w) {
    const auto out = sgc_forward(adj, x, params);
    Matrix dz;
    const double loss = cross_entropy(out.soft.probs, labels, nodes, &dz);
    // Z = Â(Â(XW))  =>  dW = Xᵀ Â(Â dZ) for symmetric Â.
    grad_w = x.transpose() * spmm(adj, spmm(adj, dz));
    return loss;
}

GcnParams init_gcn_params(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes,
                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto glorot = [&](std::size_t rows, std::size_t cols) {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
        }
        return m;
    };
    GcnParams p;
    p.w1 = glorot(input_dim, hidden_dim);
    p.w2 = glorot(hidden_dim, num_classes);
    return p;
}

}  // namespace chagnn
