#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "diffcls/condition.hpp"
#include "diffcls/errors.hpp"
#include "diffcls/rng.hpp"
#include "diffcls/schedule.hpp"

namespace diffcls {

template <typename S>
using MatrixRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Arch {
    int height = 16;
    int width = 16;
    int channels = 1;
    int num_classes = 8;
    int hidden = 64;
    int time_embed_dim = 16;
    int cond_embed_dim = 8;
    // Largest sinusoidal period; set to the schedule's T when the network is
    // built for a specific schedule.
    int time_base = 1000;

    int image_dim() const { return height * width * channels; }
    int input_dim() const { return image_dim() + time_embed_dim + cond_embed_dim; }
    int cond_tokens() const { return num_classes + 2; }

    void validate() const {
        if (height < 1 || width < 1 || channels < 1 || num_classes < 1 || hidden < 1 ||
            time_embed_dim < 1 || cond_embed_dim < 1 || time_base < 1)
            throw ConfigError("arch: all dimensions must be >= 1");
    }

    bool operator==(const Arch&) const = default;
};

// Canonical parameter vectorization: condition embeddings (row-major), then
// per layer its weight matrix (row-major) followed by its bias, in layer
// order. Serialization and the optimizer both walk this flat layout.
struct ParamLayout {
    Eigen::Index embed = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0;
    Eigen::Index total = 0;

    static ParamLayout from(const Arch& a) {
        ParamLayout l;
        const Eigen::Index D = a.image_dim(), in = a.input_dim(), h = a.hidden;
        l.embed = 0;
        l.w1 = l.embed + a.cond_tokens() * a.cond_embed_dim;
        l.b1 = l.w1 + h * in;
        l.w2 = l.b1 + h;
        l.b2 = l.w2 + h * h;
        l.w3 = l.b2 + h;
        l.b3 = l.w3 + D * h;
        l.total = l.b3 + D;
        return l;
    }
};

// Gradient buffers mirroring the network's flat parameter vector.
template <typename S>
struct GradientSet {
    VectorX<S> flat;
    long accumulations = 0;

    explicit GradientSet(Eigen::Index n) : flat(VectorX<S>::Zero(n)) {}

    void zero() {
        flat.setZero();
        accumulations = 0;
    }

    double global_norm() const { return flat.template cast<double>().norm(); }
};

// Trainable conditional noise predictor: a 2-hidden-layer SiLU MLP over
// [flatten(x_t), sinusoidal(t), embed(c)], output the same shape as x_t.
template <typename S>
struct DenoiserNetwork {
    Arch arch;
    ParamLayout layout;
    VectorX<S> params;
    std::uint64_t version = 0; // bumped on every parameter mutation

    using MapMat = Eigen::Map<MatrixRM<S>>;
    using CMapMat = Eigen::Map<const MatrixRM<S>>;
    using MapVec = Eigen::Map<VectorX<S>>;
    using CMapVec = Eigen::Map<const VectorX<S>>;

    CMapMat cond_embed() const { return {params.data() + layout.embed, arch.cond_tokens(), arch.cond_embed_dim}; }
    CMapMat w1() const { return {params.data() + layout.w1, arch.hidden, arch.input_dim()}; }
    CMapVec b1() const { return {params.data() + layout.b1, arch.hidden}; }
    CMapMat w2() const { return {params.data() + layout.w2, arch.hidden, arch.hidden}; }
    CMapVec b2() const { return {params.data() + layout.b2, arch.hidden}; }
    CMapMat w3() const { return {params.data() + layout.w3, arch.image_dim(), arch.hidden}; }
    CMapVec b3() const { return {params.data() + layout.b3, arch.image_dim()}; }

    Eigen::Index param_count() const { return layout.total; }

    // Any writable access invalidates outstanding tapes.
    VectorX<S>& mutable_params() {
        ++version;
        return params;
    }
};

template <typename S = float>
DenoiserNetwork<S> init_network(const Arch& arch, std::uint64_t seed) {
    arch.validate();
    DenoiserNetwork<S> net;
    net.arch = arch;
    net.layout = ParamLayout::from(arch);
    net.params = VectorX<S>::Zero(net.layout.total);

    // Scaled uniform init, bound 1/sqrt(fan_in); biases stay zero. Draw order
    // follows the canonical flat layout so init is reproducible per seed.
    Rng rng(mix_seed(seed, seed_tag::init));
    auto fill_uniform = [&](Eigen::Index offset, Eigen::Index n, double bound) {
        for (Eigen::Index i = 0; i < n; ++i)
            net.params[offset + i] = static_cast<S>(rng.uniform(-bound, bound));
    };
    const auto& l = net.layout;
    fill_uniform(l.embed, l.w1 - l.embed, 1.0 / std::sqrt(double(arch.cond_embed_dim)));
    fill_uniform(l.w1, l.b1 - l.w1, 1.0 / std::sqrt(double(arch.input_dim())));
    fill_uniform(l.w2, l.b2 - l.w2, 1.0 / std::sqrt(double(arch.hidden)));
    fill_uniform(l.w3, l.b3 - l.w3, 1.0 / std::sqrt(double(arch.hidden)));
    return net;
}

// Sinusoidal timestep features, not learned. Frequencies are geometrically
// spaced so the pair periods run from 1 up to time_base; entry 2p is
// sin(t * f_p), entry 2p+1 is cos(t * f_p).
template <typename S>
VectorX<S> time_embedding(int dim, int time_base, int t) {
    VectorX<S> e(dim);
    const int half = (dim + 1) / 2;
    for (int p = 0; p < half; ++p) {
        const double expo = (half == 1) ? 0.0 : static_cast<double>(p) / (half - 1);
        const double freq = std::pow(static_cast<double>(time_base), -expo);
        const double arg = static_cast<double>(t) * freq;
        e[2 * p] = static_cast<S>(std::sin(arg));
        if (2 * p + 1 < dim) e[2 * p + 1] = static_cast<S>(std::cos(arg));
    }
    return e;
}

namespace detail {

template <typename S>
S silu(S z) {
    return z / (S(1) + std::exp(-z));
}

template <typename S>
S silu_grad(S z) {
    const S sig = S(1) / (S(1) + std::exp(-z));
    return sig * (S(1) + z * (S(1) - sig));
}

} // namespace detail

// Retained activations for one forward pass; consumed by backward().
template <typename S>
struct ForwardTape {
    VectorX<S> input; // [x_t, time_emb, cond_emb]
    VectorX<S> z1, a1, z2, a2;
    int cond_token = -1;
    std::uint64_t net_version = 0;
};

template <typename S>
struct Prediction {
    VectorX<S> eps_hat;
    ForwardTape<S> tape;
};

namespace detail {

template <typename S>
VectorX<S> forward_impl(const DenoiserNetwork<S>& net, const VectorX<S>& x_t, int t,
                        const Condition& cond, ForwardTape<S>* tape) {
    const Arch& a = net.arch;
    if (x_t.size() != a.image_dim())
        throw ArgumentError("predict_noise: input size " + std::to_string(x_t.size()) +
                            " != image dim " + std::to_string(a.image_dim()));
    if (t < 1 || t > a.time_base)
        throw ArgumentError("predict_noise: timestep " + std::to_string(t) +
                            " out of range 1.." + std::to_string(a.time_base));

    const int token = cond.token_index(a.num_classes);
    VectorX<S> input(a.input_dim());
    input.head(a.image_dim()) = x_t;
    input.segment(a.image_dim(), a.time_embed_dim) =
        time_embedding<S>(a.time_embed_dim, a.time_base, t);
    input.tail(a.cond_embed_dim) = net.cond_embed().row(token).transpose();

    VectorX<S> z1 = net.w1() * input + net.b1();
    VectorX<S> a1 = z1.unaryExpr([](S z) { return silu(z); });
    VectorX<S> z2 = net.w2() * a1 + net.b2();
    VectorX<S> a2 = z2.unaryExpr([](S z) { return silu(z); });
    VectorX<S> out = net.w3() * a2 + net.b3();

    if (tape) {
        tape->input = std::move(input);
        tape->z1 = std::move(z1);
        tape->a1 = std::move(a1);
        tape->z2 = std::move(z2);
        tape->a2 = std::move(a2);
        tape->cond_token = token;
        tape->net_version = net.version;
    }
    return out;
}

} // namespace detail

template <typename S>
Prediction<S> predict_noise(const DenoiserNetwork<S>& net, const VectorX<S>& x_t, int t,
                            const Condition& cond) {
    Prediction<S> p;
    p.eps_hat = detail::forward_impl(net, x_t, t, cond, &p.tape);
    return p;
}

// Forward pass without tape retention, for inference-heavy paths.
template <typename S>
VectorX<S> predict_noise_only(const DenoiserNetwork<S>& net, const VectorX<S>& x_t, int t,
                              const Condition& cond) {
    return detail::forward_impl<S>(net, x_t, t, cond, nullptr);
}

// Exact analytic gradients of a scalar loss with respect to every parameter,
// given d(loss)/d(eps_hat). Accumulates into `grads`. Only the condition
// embedding row used by the pass receives gradient; the time embedding is not
// learned.
template <typename S>
void backward(const DenoiserNetwork<S>& net, const ForwardTape<S>& tape,
              const VectorX<S>& dloss_deps_hat, GradientSet<S>& grads) {
    const Arch& a = net.arch;
    if (tape.net_version != net.version)
        throw UsageError("backward: tape is stale (parameters changed since forward)");
    if (dloss_deps_hat.size() != a.image_dim())
        throw ArgumentError("backward: upstream gradient size mismatch");
    if (grads.flat.size() != net.layout.total)
        throw ArgumentError("backward: gradient buffer size mismatch");

    const auto& l = net.layout;
    const Eigen::Index D = a.image_dim(), in = a.input_dim(), h = a.hidden;
    typename DenoiserNetwork<S>::MapMat gw3(grads.flat.data() + l.w3, D, h);
    typename DenoiserNetwork<S>::MapVec gb3(grads.flat.data() + l.b3, D);
    typename DenoiserNetwork<S>::MapMat gw2(grads.flat.data() + l.w2, h, h);
    typename DenoiserNetwork<S>::MapVec gb2(grads.flat.data() + l.b2, h);
    typename DenoiserNetwork<S>::MapMat gw1(grads.flat.data() + l.w1, h, in);
    typename DenoiserNetwork<S>::MapVec gb1(grads.flat.data() + l.b1, h);
    typename DenoiserNetwork<S>::MapMat gembed(grads.flat.data() + l.embed, a.cond_tokens(),
                                               a.cond_embed_dim);

    const VectorX<S>& g = dloss_deps_hat;
    gw3.noalias() += g * tape.a2.transpose();
    gb3 += g;

    VectorX<S> ga2 = net.w3().transpose() * g;
    VectorX<S> gz2 =
        ga2.cwiseProduct(tape.z2.unaryExpr([](S z) { return detail::silu_grad(z); }));
    gw2.noalias() += gz2 * tape.a1.transpose();
    gb2 += gz2;

    VectorX<S> ga1 = net.w2().transpose() * gz2;
    VectorX<S> gz1 =
        ga1.cwiseProduct(tape.z1.unaryExpr([](S z) { return detail::silu_grad(z); }));
    gw1.noalias() += gz1 * tape.input.transpose();
    gb1 += gz1;

    VectorX<S> ginput = net.w1().transpose() * gz1;
    gembed.row(tape.cond_token) += ginput.tail(a.cond_embed_dim).transpose();

    ++grads.accumulations;
}

} // namespace diffcls
