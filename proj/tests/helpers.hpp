#pragma once

// Test-only utilities: finite-difference oracles and small random fixtures.
// These stay independent of the implementation paths they check.

#include <functional>

#include "dynmap/neuralnet.hpp"

namespace testutil {

using dynmap::nn::Mlp;
using dynmap::nn::Vec;

// Central finite difference d f / d x at the current value of x.
inline double central_diff(double& x, const std::function<double()>& f, double h = 1e-4) {
    const double saved = x;
    x = saved + h;
    const double fp = f();
    x = saved - h;
    const double fm = f();
    x = saved;
    return (fp - fm) / (2.0 * h);
}

inline bool grad_close(double analytic, double numeric, double rel_tol = 1e-4,
                       double abs_floor = 1e-6) {
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    return diff <= abs_floor || diff <= rel_tol * scale;
}

inline Mlp random_mlp(const std::vector<size_t>& dims, dynmap::nn::Activation out_act,
                      dynmap::Rng& rng) {
    Mlp net;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = (i + 2 == dims.size());
        net.layers.push_back(dynmap::nn::make_layer(
            dims[i], dims[i + 1], last ? out_act : dynmap::nn::Activation::Relu, rng));
    }
    return net;
}

inline Vec random_vec(size_t n, dynmap::Rng& rng, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline Vec random_distribution(size_t n, dynmap::Rng& rng) {
    Vec v(n);
    double sum = 0.0;
    for (double& x : v) {
        x = rng.uniform(0.01, 1.0);
        sum += x;
    }
    for (double& x : v) x /= sum;
    return v;
}

}  // namespace testutil
