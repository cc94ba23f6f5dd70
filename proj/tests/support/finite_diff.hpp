#pragma once

// Central finite-difference oracle for gradient checks. Lives in test code
// only; it evaluates the training objective by full re-execution and knows
// nothing about the analytic backward pass it is used to verify.

#include <cstddef>
#include <functional>
#include <vector>

#include "fairrank/fairness.hpp"
#include "fairrank/matrix.hpp"
#include "fairrank/nn.hpp"

namespace fairrank::testing {

// Pointers to every trainable scalar in declaration order (weights, biases,
// batchnorm scale/shift). Running statistics and Adam state are excluded.
inline std::vector<double*> trainable_entries(ModelParams& params) {
    std::vector<double*> entries;
    for (auto& w : params.weights)
        for (auto& x : w.data) entries.push_back(&x);
    for (auto& b : params.biases)
        for (auto& x : b) entries.push_back(&x);
    for (auto& g : params.bn_scale)
        for (auto& x : g) entries.push_back(&x);
    for (auto& s : params.bn_shift)
        for (auto& x : s) entries.push_back(&x);
    return entries;
}

inline std::vector<double> flatten_gradients(const Gradients& grads) {
    std::vector<double> flat;
    for (const auto& w : grads.weights) flat.insert(flat.end(), w.data.begin(), w.data.end());
    for (const auto& b : grads.biases) flat.insert(flat.end(), b.begin(), b.end());
    for (const auto& g : grads.bn_scale) flat.insert(flat.end(), g.begin(), g.end());
    for (const auto& s : grads.bn_shift) flat.insert(flat.end(), s.begin(), s.end());
    return flat;
}

// L_total = BCE + lambda * fairness, evaluated by a fresh train-mode forward
// on a copy of the parameters.
inline double total_loss(const ModelParams& params, const Matrix& batch,
                         const std::vector<double>& labels, const GroupMasks& masks,
                         const FairnessSpec& spec) {
    ModelParams copy = params;
    ForwardCache cache;
    const std::vector<double> preds = forward_train(copy, batch, cache);
    double loss = bce_loss(preds, labels).loss;
    if (spec.mode != FairnessMode::none && spec.lambda > 0.0)
        loss += spec.lambda * fairness_loss(preds, masks, spec).loss;
    return loss;
}

// Central differences over every trainable entry.
inline std::vector<double> numerical_gradient(const ModelParams& params, const Matrix& batch,
                                              const std::vector<double>& labels,
                                              const GroupMasks& masks, const FairnessSpec& spec,
                                              double step = 1e-5) {
    ModelParams work = params;
    auto entries = trainable_entries(work);
    std::vector<double> grad(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double original = *entries[i];
        *entries[i] = original + step;
        const double plus = total_loss(work, batch, labels, masks, spec);
        *entries[i] = original - step;
        const double minus = total_loss(work, batch, labels, masks, spec);
        *entries[i] = original;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

// Analytic gradient of the same objective, flattened in matching order.
inline std::vector<double> analytic_gradient(const ModelParams& params, const Matrix& batch,
                                             const std::vector<double>& labels,
                                             const GroupMasks& masks, const FairnessSpec& spec) {
    ModelParams copy = params;
    ForwardCache cache;
    const std::vector<double> preds = forward_train(copy, batch, cache);
    BceResult bce = bce_loss(preds, labels);
    std::vector<double> total_grad = std::move(bce.grad);
    if (spec.mode != FairnessMode::none && spec.lambda > 0.0) {
        const ParityResult fair = fairness_loss(preds, masks, spec);
        for (std::size_t i = 0; i < total_grad.size(); ++i)
            total_grad[i] += spec.lambda * fair.grad[i];
    }
    return flatten_gradients(backward(copy, cache, total_grad));
}

// Central differences of a scalar function of a prediction vector.
inline std::vector<double> numerical_gradient_wrt_predictions(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> point,
    double step = 1e-7) {
    std::vector<double> grad(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double original = point[i];
        point[i] = original + step;
        const double plus = f(point);
        point[i] = original - step;
        const double minus = f(point);
        point[i] = original;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

inline bool gradients_match(const std::vector<double>& analytic,
                            const std::vector<double>& numerical, double rel_tol = 1e-4,
                            double abs_floor = 1e-7) {
    if (analytic.size() != numerical.size()) return false;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double diff = std::abs(analytic[i] - numerical[i]);
        const double scale = std::max(std::abs(analytic[i]), std::abs(numerical[i]));
        if (diff > std::max(abs_floor, rel_tol * scale)) return false;
    }
    return true;
}

}  // namespace fairrank::testing
