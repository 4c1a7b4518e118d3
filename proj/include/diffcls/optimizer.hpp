#pragma once

#include <cmath>

#include "diffcls/errors.hpp"
#include "diffcls/network.hpp"

namespace diffcls {

struct AdamWParams {
    double learning_rate = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename S>
struct AdamWState {
    VectorX<S> m, v; // first/second moment buffers, flat layout
    long step_count = 0;

    explicit AdamWState(Eigen::Index n)
        : m(VectorX<S>::Zero(n)), v(VectorX<S>::Zero(n)) {}
};

// Scales `grad` in place so its global L2 norm is at most max_norm; direction
// is preserved. Returns the pre-clip norm.
template <typename S>
double clip_global_norm(VectorX<S>& grad, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("clip_global_norm: max_norm must be > 0");
    const double norm = grad.template cast<double>().norm();
    if (norm > max_norm) grad *= static_cast<S>(max_norm / norm);
    return norm;
}

// One decoupled-weight-decay Adam update with bias correction. Decay is
// applied directly to the parameters, independent of the gradient moments:
// with zero gradients a step multiplies each weight by exactly (1 - lr*wd).
template <typename S>
void adamw_step(DenoiserNetwork<S>& net, const VectorX<S>& grad, AdamWState<S>& state,
                const AdamWParams& p) {
    if (grad.size() != net.params.size() || state.m.size() != net.params.size())
        throw ArgumentError("adamw_step: buffer size mismatch");

    ++state.step_count;
    const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.step_count));

    VectorX<S>& params = net.mutable_params();
    const S b1 = static_cast<S>(p.beta1), b2 = static_cast<S>(p.beta2);
    const S decay = static_cast<S>(p.learning_rate * p.weight_decay);
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const S g = grad[i];
        state.m[i] = b1 * state.m[i] + (S(1) - b1) * g;
        state.v[i] = b2 * state.v[i] + (S(1) - b2) * g * g;
        const double m_hat = static_cast<double>(state.m[i]) / bc1;
        const double v_hat = static_cast<double>(state.v[i]) / bc2;
        params[i] -= decay * params[i];
        params[i] -= static_cast<S>(p.learning_rate * m_hat / (std::sqrt(v_hat) + p.eps));
    }
}

} // namespace diffcls
