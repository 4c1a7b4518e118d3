#pragma once

#include <algorithm>
#include <string>

#include "diffcls/errors.hpp"
#include "diffcls/schedule.hpp"

namespace diffcls {

enum class Objective { Base, CoDiT, FMDiT, AMDiT };

// Choice of the non-negative condition c_nn used by the adaptive margin.
enum class NnVariant { Positive, NonClass, Null };

inline std::string to_string(Objective o) {
    switch (o) {
    case Objective::Base: return "base";
    case Objective::CoDiT: return "codit";
    case Objective::FMDiT: return "fmdit";
    case Objective::AMDiT: return "amdit";
    }
    return "?";
}

inline Objective parse_objective(const std::string& s) {
    if (s == "base") return Objective::Base;
    if (s == "codit") return Objective::CoDiT;
    if (s == "fmdit") return Objective::FMDiT;
    if (s == "amdit") return Objective::AMDiT;
    throw ConfigError("unknown objective '" + s + "' (expected base|codit|fmdit|amdit)");
}

inline std::string to_string(NnVariant v) {
    switch (v) {
    case NnVariant::Positive: return "positive";
    case NnVariant::NonClass: return "nonclass";
    case NnVariant::Null: return "null";
    }
    return "?";
}

inline NnVariant parse_nn_variant(const std::string& s) {
    if (s == "positive") return NnVariant::Positive;
    if (s == "nonclass") return NnVariant::NonClass;
    if (s == "null") return NnVariant::Null;
    throw ConfigError("unknown nn variant '" + s + "' (expected positive|nonclass|null)");
}

struct LossConfig {
    Objective objective = Objective::Base;
    double lambda1 = 0.005;      // negative-pair weight for CoDiT
    double margin_fixed = 0.0005; // m_f for FMDiT
    double alpha = 0.01;         // adaptive-margin weight for AMDiT
    NnVariant nn_variant = NnVariant::Positive;
    // Optional multiple of the plain denoising loss added on top of a
    // discrepancy loss; a saturated hinge otherwise yields zero gradient.
    double add_base_weight = 0.0;
    // Treat the adaptive margin term as a constant during backprop.
    bool stop_grad_nn = false;

    void validate() const {
        if (lambda1 < 0 || margin_fixed < 0 || alpha < 0 || add_base_weight < 0)
            throw ConfigError("loss config: lambda1, margin, alpha and add_base_weight "
                              "must be non-negative");
    }

    bool uses_negative() const { return objective != Objective::Base; }
    bool uses_nn() const { return objective == Objective::AMDiT; }
};

// Noise-prediction errors for one (x_t, t, eps) under the three prompt roles.
struct ErrorTriple {
    double d_p = 0.0;
    double d_n = 0.0;
    double d_nn = 0.0;
};

// d = mean of squared elementwise differences. The per-element mean (rather
// than the sum) keeps lambda1 / m_f / alpha magnitudes independent of the
// image resolution. Accumulated in double for any scalar type.
template <typename S>
double noise_error(const VectorX<S>& eps_hat, const VectorX<S>& eps) {
    if (eps_hat.size() != eps.size())
        throw ArgumentError("noise_error: shape mismatch (" + std::to_string(eps_hat.size()) +
                            " vs " + std::to_string(eps.size()) + ")");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eps.size(); ++i) {
        const double d = static_cast<double>(eps_hat[i]) - static_cast<double>(eps[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(eps.size());
}

inline double loss_base(double d_p) { return d_p; }

inline double loss_codit(double d_p, double d_n, double lambda1) {
    return d_p - lambda1 * d_n;
}

inline double loss_fmdit(double d_p, double d_n, double margin) {
    return std::max(d_p - d_n + margin, 0.0);
}

inline double loss_amdit(double d_p, double d_n, double d_nn, double alpha) {
    return std::max(d_p - d_n + alpha * d_nn, 0.0);
}

// Per-sample loss value plus d(loss)/d(d_*) coefficients, used by the trainer
// to compose upstream gradients for each conditional pass.
struct LossTerms {
    double loss = 0.0;
    double coef_p = 0.0;
    double coef_n = 0.0;
    double coef_nn = 0.0;
};

inline LossTerms loss_terms(const LossConfig& cfg, const ErrorTriple& d) {
    LossTerms t;
    switch (cfg.objective) {
    case Objective::Base:
        t.loss = loss_base(d.d_p);
        t.coef_p = 1.0;
        break;
    case Objective::CoDiT:
        t.loss = loss_codit(d.d_p, d.d_n, cfg.lambda1);
        t.coef_p = 1.0;
        t.coef_n = -cfg.lambda1;
        break;
    case Objective::FMDiT: {
        t.loss = loss_fmdit(d.d_p, d.d_n, cfg.margin_fixed);
        const bool active = d.d_p - d.d_n + cfg.margin_fixed > 0.0;
        t.coef_p = active ? 1.0 : 0.0;
        t.coef_n = active ? -1.0 : 0.0;
        break;
    }
    case Objective::AMDiT: {
        t.loss = loss_amdit(d.d_p, d.d_n, d.d_nn, cfg.alpha);
        const bool active = d.d_p - d.d_n + cfg.alpha * d.d_nn > 0.0;
        t.coef_p = active ? 1.0 : 0.0;
        t.coef_n = active ? -1.0 : 0.0;
        t.coef_nn = (active && !cfg.stop_grad_nn) ? cfg.alpha : 0.0;
        break;
    }
    }
    if (cfg.add_base_weight > 0.0) {
        t.loss += cfg.add_base_weight * d.d_p;
        t.coef_p += cfg.add_base_weight;
    }
    return t;
}

} // namespace diffcls
