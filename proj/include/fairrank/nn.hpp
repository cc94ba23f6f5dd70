#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fairrank/error.hpp"
#include "fairrank/matrix.hpp"
#include "fairrank/rng.hpp"

namespace fairrank {

// Fixed topology: input -> dense -> batchnorm -> ReLU (twice) -> dense -> sigmoid.
inline constexpr std::size_t kHiddenLayers = 2;

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;
inline constexpr double kBnEpsilon = 1e-5;
// running = momentum * running + (1 - momentum) * batch
inline constexpr double kBnMomentum = 0.9;
inline constexpr double kBceClamp = 1e-12;

enum class Mode { train, eval };

struct AdamState {
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
    std::vector<std::vector<double>> m_bn_scale, v_bn_scale;
    std::vector<std::vector<double>> m_bn_shift, v_bn_shift;
    std::int64_t step = 0;
};

struct ModelParams {
    std::vector<std::size_t> layer_sizes;  // {input, hidden1, hidden2, 1}
    std::vector<Matrix> weights;           // weights[l]: layer_sizes[l] x layer_sizes[l+1]
    std::vector<std::vector<double>> biases;
    // Batchnorm parameters for the two hidden layers.
    std::vector<std::vector<double>> bn_scale;         // gamma
    std::vector<std::vector<double>> bn_shift;         // beta
    std::vector<std::vector<double>> bn_running_mean;
    std::vector<std::vector<double>> bn_running_var;
    AdamState adam;
};

// Gradients of the trainable tensors, same shapes as the parameters.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::vector<std::vector<double>> bn_scale;
    std::vector<std::vector<double>> bn_shift;
};

// Everything a train-mode forward must remember for the exact backward pass.
struct ForwardCache {
    std::size_t batch_rows = 0;
    std::vector<std::size_t> layer_sizes;
    Matrix input;
    std::vector<Matrix> pre_bn;                  // dense output per hidden layer
    std::vector<Matrix> normalized;              // batchnorm x-hat per hidden layer
    std::vector<std::vector<double>> batch_mean;
    std::vector<std::vector<double>> batch_var;
    std::vector<Matrix> activated;               // post-ReLU per hidden layer
    std::vector<double> predictions;             // sigmoid outputs
};

inline ModelParams init_params(const std::vector<std::size_t>& layer_sizes, Rng& rng) {
    if (layer_sizes.size() != kHiddenLayers + 2)
        throw ConfigError("init_params: expected 4 layer sizes, got " +
                          std::to_string(layer_sizes.size()));
    if (layer_sizes.back() != 1)
        throw ConfigError("init_params: output layer width must be 1");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw ConfigError("init_params: zero layer width");

    ModelParams p;
    p.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t fan_in = layer_sizes[l];
        const std::size_t fan_out = layer_sizes[l + 1];
        const double scale = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (double& x : w.data) x = rng.uniform(-scale, scale);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(fan_out, 0.0);
    }
    for (std::size_t l = 0; l < kHiddenLayers; ++l) {
        const std::size_t width = layer_sizes[l + 1];
        p.bn_scale.emplace_back(width, 1.0);
        p.bn_shift.emplace_back(width, 0.0);
        p.bn_running_mean.emplace_back(width, 0.0);
        p.bn_running_var.emplace_back(width, 1.0);
    }

    auto& a = p.adam;
    for (const Matrix& w : p.weights) {
        a.m_weights.emplace_back(w.rows, w.cols);
        a.v_weights.emplace_back(w.rows, w.cols);
    }
    for (const auto& b : p.biases) {
        a.m_biases.emplace_back(b.size(), 0.0);
        a.v_biases.emplace_back(b.size(), 0.0);
    }
    for (std::size_t l = 0; l < kHiddenLayers; ++l) {
        const std::size_t width = layer_sizes[l + 1];
        a.m_bn_scale.emplace_back(width, 0.0);
        a.v_bn_scale.emplace_back(width, 0.0);
        a.m_bn_shift.emplace_back(width, 0.0);
        a.v_bn_shift.emplace_back(width, 0.0);
    }
    return p;
}

namespace detail {

inline Matrix dense(const Matrix& input, const Matrix& weights, const std::vector<double>& bias) {
    Matrix out = matmul(input, weights);
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* row = out.data.data() + i * out.cols;
        for (std::size_t j = 0; j < out.cols; ++j) row[j] += bias[j];
    }
    return out;
}

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace detail

// Train-mode forward: normalizes with batch statistics, updates the running
// stats in `params`, and fills `cache` for backward. Eval mode never touches
// this path; use predict() instead.
inline std::vector<double> forward_train(ModelParams& params, const Matrix& batch,
                                         ForwardCache& cache) {
    if (batch.cols != params.layer_sizes[0])
        throw ShapeError("forward: batch has " + std::to_string(batch.cols) +
                         " features, model expects " + std::to_string(params.layer_sizes[0]));
    if (batch.rows < 2)
        throw DegenerateBatchError("forward: train mode needs at least 2 rows for batch statistics");

    cache = ForwardCache{};
    cache.batch_rows = batch.rows;
    cache.layer_sizes = params.layer_sizes;
    cache.input = batch;

    Matrix current = batch;
    for (std::size_t l = 0; l < kHiddenLayers; ++l) {
        Matrix z = detail::dense(current, params.weights[l], params.biases[l]);
        cache.pre_bn.push_back(z);

        auto mean = column_means(z);
        auto var = column_variances(z, mean);

        Matrix xhat(z.rows, z.cols);
        Matrix activated(z.rows, z.cols);
        for (std::size_t j = 0; j < z.cols; ++j) {
            const double inv_std = 1.0 / std::sqrt(var[j] + kBnEpsilon);
            const double gamma = params.bn_scale[l][j];
            const double beta = params.bn_shift[l][j];
            for (std::size_t i = 0; i < z.rows; ++i) {
                const double xh = (z(i, j) - mean[j]) * inv_std;
                xhat(i, j) = xh;
                const double y = gamma * xh + beta;
                activated(i, j) = y > 0.0 ? y : 0.0;
            }
            params.bn_running_mean[l][j] =
                kBnMomentum * params.bn_running_mean[l][j] + (1.0 - kBnMomentum) * mean[j];
            params.bn_running_var[l][j] =
                kBnMomentum * params.bn_running_var[l][j] + (1.0 - kBnMomentum) * var[j];
        }
        cache.normalized.push_back(std::move(xhat));
        cache.batch_mean.push_back(std::move(mean));
        cache.batch_var.push_back(std::move(var));
        cache.activated.push_back(activated);
        current = std::move(activated);
    }

    Matrix logits = detail::dense(current, params.weights[kHiddenLayers], params.biases[kHiddenLayers]);
    std::vector<double> preds(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) preds[i] = detail::sigmoid(logits(i, 0));
    cache.predictions = preds;
    ensure_finite(logits, "forward logits");
    return preds;
}

// Eval-mode forward using running statistics. Pure: never mutates params.
inline std::vector<double> predict(const ModelParams& params, const Matrix& batch) {
    if (batch.cols != params.layer_sizes[0])
        throw ShapeError("predict: batch has " + std::to_string(batch.cols) +
                         " features, model expects " + std::to_string(params.layer_sizes[0]));
    Matrix current = batch;
    for (std::size_t l = 0; l < kHiddenLayers; ++l) {
        Matrix z = detail::dense(current, params.weights[l], params.biases[l]);
        for (std::size_t j = 0; j < z.cols; ++j) {
            const double inv_std = 1.0 / std::sqrt(params.bn_running_var[l][j] + kBnEpsilon);
            const double gamma = params.bn_scale[l][j];
            const double beta = params.bn_shift[l][j];
            for (std::size_t i = 0; i < z.rows; ++i) {
                const double y = gamma * (z(i, j) - params.bn_running_mean[l][j]) * inv_std + beta;
                z(i, j) = y > 0.0 ? y : 0.0;
            }
        }
        current = std::move(z);
    }
    Matrix logits = detail::dense(current, params.weights[kHiddenLayers], params.biases[kHiddenLayers]);
    std::vector<double> preds(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) preds[i] = detail::sigmoid(logits(i, 0));
    return preds;
}

inline std::vector<double> forward(ModelParams& params, const Matrix& batch, Mode mode,
                                   ForwardCache* cache = nullptr) {
    if (mode == Mode::train) {
        ForwardCache local;
        ForwardCache& target = cache ? *cache : local;
        return forward_train(params, batch, target);
    }
    return predict(params, batch);
}

// Exact chain rule through sigmoid, dense layers, batchnorm and ReLU.
// `loss_grad` is dL/dprediction per batch row. Gradients come back in the
// trainable-parameter shapes; running stats are not trainable.
inline Gradients backward(const ModelParams& params, const ForwardCache& cache,
                          const std::vector<double>& loss_grad) {
    if (cache.layer_sizes != params.layer_sizes || cache.pre_bn.size() != kHiddenLayers ||
        cache.input.rows != cache.batch_rows || cache.predictions.size() != cache.batch_rows)
        throw InvariantError("backward: cache does not match the supplied parameters");
    for (std::size_t l = 0; l < kHiddenLayers; ++l)
        if (cache.pre_bn[l].cols != params.layer_sizes[l + 1])
            throw InvariantError("backward: cache does not match the supplied parameters");
    if (loss_grad.size() != cache.batch_rows)
        throw ShapeError("backward: loss gradient length " + std::to_string(loss_grad.size()) +
                         " != batch rows " + std::to_string(cache.batch_rows));

    const std::size_t n = cache.batch_rows;
    Gradients g;
    g.weights.resize(kHiddenLayers + 1);
    g.biases.resize(kHiddenLayers + 1);
    g.bn_scale.resize(kHiddenLayers);
    g.bn_shift.resize(kHiddenLayers);

    // Through the sigmoid: dL/dz = dL/dp * p * (1 - p).
    Matrix grad_logits(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = cache.predictions[i];
        grad_logits(i, 0) = loss_grad[i] * p * (1.0 - p);
    }

    // Output dense layer.
    g.weights[kHiddenLayers] = matmul_tn(cache.activated[kHiddenLayers - 1], grad_logits);
    g.biases[kHiddenLayers] = column_sums(grad_logits);
    Matrix grad_activated = matmul_nt(grad_logits, params.weights[kHiddenLayers]);

    for (std::size_t l = kHiddenLayers; l-- > 0;) {
        const Matrix& xhat = cache.normalized[l];
        const Matrix& activated = cache.activated[l];
        const std::size_t width = xhat.cols;

        // ReLU: pass gradient where the activation was positive.
        Matrix grad_bn_out = grad_activated;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < width; ++j)
                if (activated(i, j) <= 0.0) grad_bn_out(i, j) = 0.0;

        // Batchnorm backward, per column:
        //   dz_i = (inv_std / n) * (n * dxhat_i - sum(dxhat) - xhat_i * sum(dxhat * xhat))
        g.bn_scale[l].assign(width, 0.0);
        g.bn_shift[l].assign(width, 0.0);
        Matrix grad_pre_bn(n, width);
        for (std::size_t j = 0; j < width; ++j) {
            const double gamma = params.bn_scale[l][j];
            const double inv_std = 1.0 / std::sqrt(cache.batch_var[l][j] + kBnEpsilon);
            double sum_dxhat = 0.0;
            double sum_dxhat_xhat = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dout = grad_bn_out(i, j);
                g.bn_shift[l][j] += dout;
                g.bn_scale[l][j] += dout * xhat(i, j);
                const double dxhat = dout * gamma;
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat(i, j);
            }
            const double scale = inv_std / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double dxhat = grad_bn_out(i, j) * gamma;
                grad_pre_bn(i, j) = scale * (static_cast<double>(n) * dxhat - sum_dxhat -
                                             xhat(i, j) * sum_dxhat_xhat);
            }
        }

        const Matrix& layer_input = l == 0 ? cache.input : cache.activated[l - 1];
        g.weights[l] = matmul_tn(layer_input, grad_pre_bn);
        g.biases[l] = column_sums(grad_pre_bn);
        if (l > 0) grad_activated = matmul_nt(grad_pre_bn, params.weights[l]);
    }
    return g;
}

namespace detail {

inline bool grads_finite(const Gradients& g) {
    for (const Matrix& w : g.weights)
        if (!all_finite(w)) return false;
    for (const auto& v : g.biases)
        if (!all_finite(v)) return false;
    for (const auto& v : g.bn_scale)
        if (!all_finite(v)) return false;
    for (const auto& v : g.bn_shift)
        if (!all_finite(v)) return false;
    return true;
}

inline void adam_update(std::vector<double>& value, std::vector<double>& m, std::vector<double>& v,
                        const std::vector<double>& grad, double lr, double bc1, double bc2) {
    for (std::size_t i = 0; i < value.size(); ++i) {
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        value[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEpsilon);
    }
}

}  // namespace detail

// Standard Adam with bias correction. Rejects non-finite gradients before
// touching any state, so a failed step leaves the parameters untouched.
inline void adam_step(ModelParams& params, const Gradients& grads, double learning_rate) {
    if (grads.weights.size() != params.weights.size())
        throw ShapeError("adam_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < params.weights.size(); ++l)
        if (!grads.weights[l].same_shape(params.weights[l]) ||
            grads.biases[l].size() != params.biases[l].size())
            throw ShapeError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    if (!detail::grads_finite(grads))
        throw NumericError("adam_step: non-finite gradient entry; update not applied");

    auto& a = params.adam;
    a.step += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(a.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(a.step));

    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        detail::adam_update(params.weights[l].data, a.m_weights[l].data, a.v_weights[l].data,
                            grads.weights[l].data, learning_rate, bc1, bc2);
        detail::adam_update(params.biases[l], a.m_biases[l], a.v_biases[l], grads.biases[l],
                            learning_rate, bc1, bc2);
    }
    for (std::size_t l = 0; l < kHiddenLayers; ++l) {
        detail::adam_update(params.bn_scale[l], a.m_bn_scale[l], a.v_bn_scale[l], grads.bn_scale[l],
                            learning_rate, bc1, bc2);
        detail::adam_update(params.bn_shift[l], a.m_bn_shift[l], a.v_bn_shift[l], grads.bn_shift[l],
                            learning_rate, bc1, bc2);
    }
}

struct BceResult {
    double loss = 0.0;
    std::vector<double> grad;  // d(mean BCE)/d(prediction_i)
};

// Mean binary cross-entropy with predictions clamped to [eps, 1-eps].
inline BceResult bce_loss(const std::vector<double>& predictions,
                          const std::vector<double>& labels) {
    if (predictions.size() != labels.size())
        throw ShapeError("bce_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    const std::size_t n = predictions.size();
    BceResult out;
    out.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = predictions[i];
        if (p < kBceClamp) p = kBceClamp;
        if (p > 1.0 - kBceClamp) p = 1.0 - kBceClamp;
        const double y = labels[i];
        out.loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        out.grad[i] = (p - y) / (p * (1.0 - p)) / static_cast<double>(n);
    }
    out.loss /= static_cast<double>(n);
    return out;
}

}  // namespace fairrank
