#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "diffcls/errors.hpp"

namespace diffcls {

template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Variance schedule and the coefficient tables derived from it. Timesteps are
// 1-based throughout (t in 1..T); internal arrays are stored 0-based.
// Coefficients are kept in double regardless of the tensor scalar type.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> sqrt_alpha_bar;
    std::vector<double> sqrt_one_minus_alpha_bar;

    double beta_at(int t) const { return beta[check_t(t) - 1]; }
    double alpha_at(int t) const { return alpha[check_t(t) - 1]; }
    double alpha_bar_at(int t) const { return alpha_bar[check_t(t) - 1]; }
    double sqrt_alpha_bar_at(int t) const { return sqrt_alpha_bar[check_t(t) - 1]; }
    double sqrt_one_minus_alpha_bar_at(int t) const {
        return sqrt_one_minus_alpha_bar[check_t(t) - 1];
    }

    int check_t(int t) const {
        if (t < 1 || t > T)
            throw ArgumentError("timestep " + std::to_string(t) + " out of range 1.." +
                                std::to_string(T));
        return t;
    }
};

// Linearly spaced betas from beta_start to beta_end inclusive. The DDPM
// convention is T=1000 with betas in [1e-4, 0.02]; the desk-scale default is
// T=200 with the same endpoints.
inline NoiseSchedule build_linear_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw ConfigError("schedule: T must be >= 1, got " + std::to_string(T));
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start <= beta_end))
        throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1, got [" +
                          std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");

    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.sqrt_alpha_bar.resize(T);
    s.sqrt_one_minus_alpha_bar.resize(T);

    double running = 1.0;
    for (int i = 0; i < T; ++i) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(i) / (T - 1);
        s.beta[i] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[i] = 1.0 - s.beta[i];
        running *= s.alpha[i];
        s.alpha_bar[i] = running;
        s.sqrt_alpha_bar[i] = std::sqrt(running);
        s.sqrt_one_minus_alpha_bar[i] = std::sqrt(1.0 - running);
    }
    return s;
}

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.
// x0 is expected in [-1, 1] (diffusion space); eps matches its shape.
template <typename S>
VectorX<S> forward_sample(const VectorX<S>& x0, int t, const VectorX<S>& eps,
                          const NoiseSchedule& schedule) {
    if (x0.size() != eps.size())
        throw ArgumentError("forward_sample: x0/eps shape mismatch (" +
                            std::to_string(x0.size()) + " vs " + std::to_string(eps.size()) + ")");
    const S a = static_cast<S>(schedule.sqrt_alpha_bar_at(t));
    const S b = static_cast<S>(schedule.sqrt_one_minus_alpha_bar_at(t));
    return a * x0 + b * eps;
}

} // namespace diffcls
