#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dynmap/core.hpp"

namespace dynmap::nn {

using Vec = std::vector<double>;

struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    Vec data;  // row-major

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return data[r * cols + c]; }
};

enum class Activation { Relu, Identity, Softmax, Sigmoid };

struct DenseLayer {
    Matrix weights;  // [out x in]
    Vec biases;      // [out]
    Activation activation = Activation::Identity;

    size_t in_dim() const { return weights.cols; }
    size_t out_dim() const { return weights.rows; }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    size_t in_dim() const { return layers.front().in_dim(); }
    size_t out_dim() const { return layers.back().out_dim(); }
};

// Uniform Xavier/Glorot: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
inline Matrix xavier_init(size_t fan_in, size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_out, fan_in);
    for (double& w : m.data) w = rng.uniform(-bound, bound);
    return m;
}

inline Matrix xavier_init(size_t fan_in, size_t fan_out, uint64_t seed) {
    Rng rng(seed);
    return xavier_init(fan_in, fan_out, rng);
}

inline DenseLayer make_layer(size_t in, size_t out, Activation act, Rng& rng) {
    DenseLayer l;
    l.weights = xavier_init(in, out, rng);
    l.biases.assign(out, 0.0);
    l.activation = act;
    return l;
}

inline void softmax_inplace(Vec& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

inline void apply_activation(Activation act, Vec& v) {
    switch (act) {
        case Activation::Relu:
            for (double& x : v) x = x > 0.0 ? x : 0.0;
            break;
        case Activation::Identity:
            break;
        case Activation::Softmax:
            softmax_inplace(v);
            break;
        case Activation::Sigmoid:
            for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
            break;
    }
}

// Per-layer cache from a forward pass, sufficient for backward.
struct Tape {
    std::vector<Vec> inputs;       // input to each layer
    std::vector<Vec> activations;  // post-activation output of each layer
};

inline Vec mlp_forward(const Mlp& net, const Vec& input, Tape& tape) {
    if (input.size() != net.in_dim()) {
        throw DimensionError("mlp_forward: input length " + std::to_string(input.size()) +
                             ", expected " + std::to_string(net.in_dim()));
    }
    const size_t n = net.layers.size();
    tape.inputs.resize(n);
    tape.activations.resize(n);
    const Vec* x = &input;
    for (size_t li = 0; li < n; ++li) {
        const DenseLayer& l = net.layers[li];
        if (x->size() != l.in_dim()) throw DimensionError("mlp_forward: layer dimension mismatch");
        tape.inputs[li] = *x;
        Vec& y = tape.activations[li];
        y.assign(l.out_dim(), 0.0);
        for (size_t r = 0; r < l.out_dim(); ++r) {
            const double* wrow = &l.weights.data[r * l.in_dim()];
            double acc = l.biases[r];
            for (size_t c = 0; c < l.in_dim(); ++c) acc += wrow[c] * (*x)[c];
            y[r] = acc;
        }
        apply_activation(l.activation, y);
        x = &y;
    }
    return tape.activations.back();
}

inline Vec mlp_forward(const Mlp& net, const Vec& input) {
    Tape tape;
    return mlp_forward(net, input, tape);
}

// Gradient buffers shaped like an Mlp's parameters.
struct MlpGrads {
    std::vector<Matrix> d_weights;
    std::vector<Vec> d_biases;

    explicit MlpGrads(const Mlp& net) {
        d_weights.reserve(net.layers.size());
        d_biases.reserve(net.layers.size());
        for (const auto& l : net.layers) {
            d_weights.emplace_back(l.out_dim(), l.in_dim());
            d_biases.emplace_back(l.out_dim(), 0.0);
        }
    }

    void zero() {
        for (auto& m : d_weights) std::fill(m.data.begin(), m.data.end(), 0.0);
        for (auto& v : d_biases) std::fill(v.begin(), v.end(), 0.0);
    }
};

// Reverse-mode through the net, accumulating parameter gradients into `acc`.
// `output_grad` is the gradient w.r.t. the last layer's post-activation output,
// except for a softmax last layer where it must be the gradient w.r.t. the
// pre-softmax logits (the KL loss below emits exactly that).
inline Vec mlp_backward(const Mlp& net, const Tape& tape, const Vec& output_grad, MlpGrads& acc) {
    if (tape.activations.size() != net.layers.size()) {
        throw DimensionError("mlp_backward: tape does not match network");
    }
    if (output_grad.size() != net.out_dim()) {
        throw DimensionError("mlp_backward: output_grad length mismatch");
    }
    Vec delta = output_grad;  // gradient w.r.t. current layer's pre-activation
    for (size_t li = net.layers.size(); li-- > 0;) {
        const DenseLayer& l = net.layers[li];
        const Vec& out = tape.activations[li];
        switch (l.activation) {
            case Activation::Relu:
                for (size_t r = 0; r < delta.size(); ++r)
                    if (out[r] <= 0.0) delta[r] = 0.0;
                break;
            case Activation::Identity:
                break;
            case Activation::Softmax:
                if (li != net.layers.size() - 1) {
                    throw DimensionError("mlp_backward: interior softmax unsupported");
                }
                // delta already holds the logit gradient
                break;
            case Activation::Sigmoid:
                for (size_t r = 0; r < delta.size(); ++r) delta[r] *= out[r] * (1.0 - out[r]);
                break;
        }
        const Vec& x = tape.inputs[li];
        Matrix& dw = acc.d_weights[li];
        Vec& db = acc.d_biases[li];
        for (size_t r = 0; r < l.out_dim(); ++r) {
            const double g = delta[r];
            db[r] += g;
            double* dwrow = &dw.data[r * l.in_dim()];
            for (size_t c = 0; c < l.in_dim(); ++c) dwrow[c] += g * x[c];
        }
        Vec prev(l.in_dim(), 0.0);
        for (size_t r = 0; r < l.out_dim(); ++r) {
            const double g = delta[r];
            const double* wrow = &l.weights.data[r * l.in_dim()];
            for (size_t c = 0; c < l.in_dim(); ++c) prev[c] += g * wrow[c];
        }
        delta = std::move(prev);
    }
    return delta;  // gradient w.r.t. the network input
}

inline constexpr double kKlEpsilon = 1e-7;

inline double kl_divergence(const Vec& target, const Vec& predicted) {
    if (target.size() != predicted.size()) throw DimensionError("kl_divergence: length mismatch");
    double loss = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
        loss += target[i] * (std::log(target[i] + kKlEpsilon) - std::log(predicted[i] + kKlEpsilon));
    }
    return loss;
}

// KL(target || predicted) for softmax outputs. The returned gradient is w.r.t.
// the pre-softmax logits: predicted - target.
inline double kl_loss(const Vec& target, const Vec& predicted, Vec& logit_grad) {
    const double loss = kl_divergence(target, predicted);
    logit_grad.resize(predicted.size());
    for (size_t i = 0; i < predicted.size(); ++i) logit_grad[i] = predicted[i] - target[i];
    return loss;
}

inline double mse_loss(const Vec& target, const Vec& predicted, Vec& grad) {
    if (target.size() != predicted.size()) throw DimensionError("mse_loss: length mismatch");
    const double inv_n = 1.0 / static_cast<double>(target.size());
    double loss = 0.0;
    grad.resize(predicted.size());
    for (size_t i = 0; i < target.size(); ++i) {
        const double d = predicted[i] - target[i];
        loss += d * d;
        grad[i] = 2.0 * inv_n * d;
    }
    return loss * inv_n;
}

// L2 penalty over weight matrices only; biases are not regularized.
inline double l2_penalty(const std::vector<const Mlp*>& nets, double scale) {
    double sum_sq = 0.0;
    for (const Mlp* net : nets)
        for (const auto& l : net->layers)
            for (double w : l.weights.data) sum_sq += w * w;
    return scale * sum_sq;
}

struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t t = 0;
    Vec m;
    Vec v;

    explicit AdamState(size_t n_params, double lr_ = 0.001)
        : lr(lr_), m(n_params, 0.0), v(n_params, 0.0) {}
};

// One bias-corrected Adam update over a flat parameter/gradient pair.
inline void adam_step(AdamState& state, double* params, const double* grads, size_t n) {
    if (n != state.m.size()) throw DimensionError("adam_step: parameter count mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

}  // namespace dynmap::nn
