#pragma once

#include "relight/core/image.hpp"
#include "relight/diffusion/schedule.hpp"

namespace relight {

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise. No clamping.
ImageTensor forward_noise(const ImageTensor& x0, int t, const NoiseSchedule& schedule,
                          const ImageTensor& noise);

// One-shot clean estimate from (x_t, eps):
// x0_hat = x_t / sqrt(alpha_bar_t) - sqrt(1 - alpha_bar_t) eps / sqrt(alpha_bar_t).
// Clamped to the declared range only when requested (the sampler clamps at the
// final step only).
ImageTensor predict_x0(const ImageTensor& x_t, const ImageTensor& eps, int t,
                       const NoiseSchedule& schedule, bool clamp = false);

struct Posterior {
    ImageTensor mean;
    double var = 0.0;
};

// Reverse-step Gaussian:
// mean = (x_t - beta_t eps / sqrt(1 - alpha_bar_t)) / sqrt(alpha_t),
// var = beta_tilde_t.
Posterior posterior_mean_var(const ImageTensor& x_t, const ImageTensor& eps, int t,
                             const NoiseSchedule& schedule);

}  // namespace relight
