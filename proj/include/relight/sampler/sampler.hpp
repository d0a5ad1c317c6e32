#pragma once

#include "relight/attributes/attributes.hpp"
#include "relight/core/rng.hpp"
#include "relight/denoiser/denoiser.hpp"
#include "relight/diffusion/process.hpp"

namespace relight {

struct GuidanceConfig {
    int omega = 10;           // partial noising / guided reverse steps
    double scale = 1.8;       // base gradient scale s
    int grad_steps = 3;       // base gradient steps N
    AttributeWeights lambdas;
    AttributeToggles toggles;
    double exposure_amplitude = 0.25;
    double exposure_base = 0.46;
    bool exposure_literal_sign = false;
    int pool_size = 16;
    PhaseMode phase_mode = PhaseMode::Phasor;
    uint64_t seed = 0;
    bool clamp_final = true;
    bool static_scale = false;  // ablation: constant s instead of s-hat
    bool static_steps = false;  // ablation: constant N instead of N-hat
    int max_grad_steps = 50;    // safety cap on N-hat

    void validate(int schedule_steps) const;
};

// True when at least one attribute is toggled on with a nonzero weight.
bool attribute_guidance_active(const AttributeWeights& lambdas,
                               const AttributeToggles& toggles);

struct StepRecord {
    int t = 0;
    double exposure = 0.0, structure = 0.0, color = 0.0, total = 0.0;
    double s_hat = 0.0;
    long long n_hat = 1;
    double grad_norm = 0.0;
    double step_delta = 0.0;  // ||x_t - x_prev_draw||_2
};

struct SamplerTrace {
    std::vector<StepRecord> steps;
};

struct DynamicGuidance {
    double s_hat = 0.0;
    long long n_hat = 1;
};

// s_hat = r s and N_hat = max(1, round(r N)) with
// r = ||x_t - x_prev_draw|| / ||grad||; rounding is half away from zero.
// A gradient norm below 1e-12 skips guidance for the step (s_hat 0, N_hat 1).
DynamicGuidance dynamic_scale_and_steps(const ImageTensor& x_t,
                                        const ImageTensor& x_prev_draw,
                                        const ImageTensor& grad, double s, int N);

struct GuidedStep {
    ImageTensor x_prev;  // x_{t-1} draw
    ImageTensor x0hat;   // last clean estimate of the step (symmetric range)
    StepRecord record;
};

// One reverse step at timestep t. mu/Sigma and the dynamic (s_hat, N_hat) are
// frozen per step; eps, x0hat and the gradient are recomputed inside the
// repeat block. The shifted mean is mu - s_hat Sigma grad(L), i.e. descent on
// the attribute loss.
GuidedStep guided_step(const ImageTensor& x_t, int t, const Denoiser& denoiser,
                       const AttributeContext& ctx, const GuidanceConfig& config,
                       const NoiseSchedule& schedule, Rng& rng);

struct EnhanceResult {
    ImageTensor output;  // unit range
    SamplerTrace trace;
};

// Partial noising with omega steps followed by guided reverse sampling;
// returns the final clean estimate. omega = 0 returns the input unchanged.
EnhanceResult enhance(const ImageTensor& y0, const Denoiser& denoiser,
                      DecomposerHandle decomposer, const GuidanceConfig& config,
                      const NoiseSchedule& schedule, Rng& rng);

// Unguided full reverse process from pure noise; returns the final clean
// estimate (symmetric range).
ImageTensor ddpm_sample(const Denoiser& denoiser, const NoiseSchedule& schedule,
                        int height, int width, int channels, Rng& rng);

}  // namespace relight
