#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "diffcls/dataset.hpp"
#include "diffcls/errors.hpp"
#include "diffcls/network.hpp"
#include "diffcls/objectives.hpp"
#include "diffcls/optimizer.hpp"
#include "diffcls/rng.hpp"
#include "diffcls/schedule.hpp"

namespace diffcls {

struct TrainConfig {
    int steps = 2000;
    int batch_size = 64;
    double learning_rate = 1e-4;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 1.0;
    std::uint64_t seed = 0;
    int checkpoint_every = 0; // 0: only the final checkpoint
    LossConfig loss;

    void validate() const {
        if (steps < 0) throw ConfigError("train config: steps must be >= 0");
        if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
        if (!(learning_rate > 0)) throw ConfigError("train config: learning_rate must be > 0");
        if (!(grad_clip_norm > 0)) throw ConfigError("train config: grad_clip_norm must be > 0");
        if (weight_decay < 0) throw ConfigError("train config: weight_decay must be >= 0");
        loss.validate();
    }

    AdamWParams adamw() const {
        return {learning_rate, weight_decay, adam_beta1, adam_beta2, adam_eps};
    }
};

// Uniform draw over the K-1 incorrect classes.
inline int sample_negative(int label, int K, Rng& rng) {
    if (K < 2) throw ConfigError("sample_negative: need K >= 2, no negative class exists");
    if (label < 0 || label >= K) throw ArgumentError("sample_negative: label out of range");
    const auto draw = static_cast<int>(rng.uniform_int(0, K - 2));
    return draw >= label ? draw + 1 : draw;
}

struct StepStats {
    int step = 0;
    double loss = 0.0;
    double d_p = 0.0, d_n = 0.0, d_nn = 0.0; // batch means; NaN when unused
    double grad_norm = 0.0;                  // global L2 norm before clipping
    double grad_norm_post = 0.0;
};

struct TrainLog {
    std::vector<StepStats> rows;
};

template <typename S>
struct MiniBatch {
    std::vector<const VectorX<S>*> x0; // diffusion-space images in [-1,1]
    std::vector<int> labels;
};

// One optimization step: per sample draw t and eps, run the conditional
// passes the objective needs, average the loss over the batch, backprop,
// clip the global gradient norm, apply one AdamW update.
//
// RNG consumption order per sample is fixed (t, then the noise vector, then
// the negative class if any), which makes runs bit-reproducible per seed.
template <typename S>
StepStats train_step(DenoiserNetwork<S>& net, const MiniBatch<S>& batch,
                     const NoiseSchedule& schedule, const TrainConfig& cfg,
                     AdamWState<S>& opt, GradientSet<S>& grads, Rng& rng, int step_index = 0) {
    const std::size_t B = batch.x0.size();
    if (B == 0) throw ArgumentError("train_step: empty batch");
    if (batch.labels.size() != B) throw ArgumentError("train_step: image/label count mismatch");
    const LossConfig& lc = cfg.loss;
    if (lc.uses_negative() && net.arch.num_classes < 2)
        throw ConfigError("train_step: discrepancy objectives need K >= 2");

    grads.zero();
    StepStats stats;
    stats.step = step_index;
    const double inv_b = 1.0 / static_cast<double>(B);
    const double two_over_dim = 2.0 / static_cast<double>(net.arch.image_dim());
    double sum_loss = 0, sum_dp = 0, sum_dn = 0, sum_dnn = 0;

    VectorX<S> eps(net.arch.image_dim());
    for (std::size_t i = 0; i < B; ++i) {
        const int t = static_cast<int>(rng.uniform_int(1, schedule.T));
        rng.fill_normal(eps);
        const VectorX<S> x_t = forward_sample(*batch.x0[i], t, eps, schedule);
        const int label = batch.labels[i];

        ErrorTriple d;
        Prediction<S> pass_p = predict_noise(net, x_t, t, Condition::cls(label));
        d.d_p = noise_error(pass_p.eps_hat, eps);

        Prediction<S> pass_n, pass_nn;
        bool has_nn_pass = false;
        if (lc.uses_negative()) {
            const int neg = sample_negative(label, net.arch.num_classes, rng);
            pass_n = predict_noise(net, x_t, t, Condition::cls(neg));
            d.d_n = noise_error(pass_n.eps_hat, eps);
        }
        if (lc.uses_nn()) {
            switch (lc.nn_variant) {
            case NnVariant::Positive:
                d.d_nn = d.d_p; // reuses the positive pass
                break;
            case NnVariant::NonClass:
                pass_nn = predict_noise(net, x_t, t, Condition::nonclass());
                d.d_nn = noise_error(pass_nn.eps_hat, eps);
                has_nn_pass = true;
                break;
            case NnVariant::Null:
                pass_nn = predict_noise(net, x_t, t, Condition::null());
                d.d_nn = noise_error(pass_nn.eps_hat, eps);
                has_nn_pass = true;
                break;
            }
        }

        const LossTerms terms = loss_terms(lc, d);
        sum_loss += terms.loss;
        sum_dp += d.d_p;
        sum_dn += d.d_n;
        sum_dnn += d.d_nn;

        // d(d)/d(eps_hat) = 2/(dim) * (eps_hat - eps); the batch mean
        // contributes the 1/B factor.
        auto upstream = [&](const Prediction<S>& pass, double coef) {
            if (coef == 0.0) return;
            VectorX<S> g = (pass.eps_hat - eps) * static_cast<S>(coef * inv_b * two_over_dim);
            backward(net, pass.tape, g, grads);
        };
        double coef_p = terms.coef_p;
        if (lc.uses_nn() && lc.nn_variant == NnVariant::Positive) coef_p += terms.coef_nn;
        upstream(pass_p, coef_p);
        if (lc.uses_negative()) upstream(pass_n, terms.coef_n);
        if (has_nn_pass) upstream(pass_nn, terms.coef_nn);
    }

    stats.loss = sum_loss * inv_b;
    stats.d_p = sum_dp * inv_b;
    stats.d_n = lc.uses_negative() ? sum_dn * inv_b : std::nan("");
    stats.d_nn = lc.uses_nn() ? sum_dnn * inv_b : std::nan("");

    if (!std::isfinite(stats.loss)) {
        std::ostringstream msg;
        msg << "train_step: non-finite loss at step " << step_index << " (loss=" << stats.loss
            << ", d_p=" << stats.d_p << ", d_n=" << stats.d_n << ", d_nn=" << stats.d_nn
            << ", grad_norm=" << grads.global_norm() << ")";
        throw std::runtime_error(msg.str());
    }

    stats.grad_norm = clip_global_norm(grads.flat, cfg.grad_clip_norm);
    stats.grad_norm_post = grads.global_norm();
    adamw_step(net, grads.flat, opt, cfg.adamw());
    return stats;
}

// Per-step hook: (step index 1-based, network after the update).
template <typename S>
using TrainHook = std::function<void(int, const DenoiserNetwork<S>&)>;

// Runs cfg.steps train_steps over seeded-shuffled mini-batches (drop-last,
// reshuffling per epoch). Bit-reproducible per (seed, config, dataset).
template <typename S>
TrainLog train(DenoiserNetwork<S>& net, const GlyphDataset& ds, const NoiseSchedule& schedule,
               const TrainConfig& cfg, const TrainHook<S>& checkpoint_hook = {}) {
    cfg.validate();
    if (ds.num_classes != net.arch.num_classes ||
        static_cast<int>(ds.image_dim()) != net.arch.image_dim())
        throw ConfigError("train: dataset does not match network arch (K " +
                          std::to_string(ds.num_classes) + " vs " +
                          std::to_string(net.arch.num_classes) + ", dim " +
                          std::to_string(ds.image_dim()) + " vs " +
                          std::to_string(net.arch.image_dim()) + ")");
    if (ds.size() == 0) throw ConfigError("train: empty dataset");

    // Storage [0,1] -> diffusion space [-1,1], converted once.
    std::vector<VectorX<S>> images(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto img = ds.image(i);
        images[i].resize(static_cast<Eigen::Index>(img.size()));
        for (std::size_t j = 0; j < img.size(); ++j)
            images[i][static_cast<Eigen::Index>(j)] = static_cast<S>(2.0f * img[j] - 1.0f);
    }

    Rng data_rng(mix_seed(cfg.seed, seed_tag::data));
    Rng train_rng(mix_seed(cfg.seed, seed_tag::train));
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size(); // forces an initial shuffle

    const std::size_t batch_size = std::min<std::size_t>(cfg.batch_size, ds.size());
    GradientSet<S> grads(net.param_count());
    AdamWState<S> opt(net.param_count());
    TrainLog log;
    log.rows.reserve(cfg.steps);

    MiniBatch<S> batch;
    for (int step = 1; step <= cfg.steps; ++step) {
        if (cursor + batch_size > order.size()) {
            // Fisher-Yates with the named data stream.
            for (std::size_t i = order.size(); i > 1; --i) {
                const auto j = static_cast<std::size_t>(data_rng.uniform_int(0, i - 1));
                std::swap(order[i - 1], order[j]);
            }
            cursor = 0;
        }
        batch.x0.clear();
        batch.labels.clear();
        for (std::size_t i = 0; i < batch_size; ++i, ++cursor) {
            batch.x0.push_back(&images[order[cursor]]);
            batch.labels.push_back(ds.label(order[cursor]));
        }
        log.rows.push_back(train_step(net, batch, schedule, cfg, opt, grads, train_rng, step));
        if (checkpoint_hook && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
            checkpoint_hook(step, net);
    }
    if (checkpoint_hook) checkpoint_hook(cfg.steps, net);
    return log;
}

} // namespace diffcls
