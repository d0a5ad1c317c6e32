#pragma once

#include <vector>

#include "relight/denoiser/conv_model.hpp"
#include "relight/diffusion/schedule.hpp"

namespace relight {

struct ToyTrainConfig {
    uint64_t seed = 0;
    int steps = 2000;
    double lr = 2e-3;
    int hidden = 32;
    int conv_layers = 4;
    int time_embed = 8;
    bool coord_channels = true;
    int eval_window = 100;  // training-loss averaging window
};

struct ToyTrainReport {
    std::vector<double> window_losses;
    uint64_t checksum = 0;  // over final parameters
};

// Standard eps-prediction training on a fixed-resolution image collection
// (unit range). Deterministic given config.seed; single-threaded.
std::shared_ptr<ConvDenoiser> train_toy_denoiser(const std::vector<ImageTensor>& dataset,
                                                 const NoiseSchedule& schedule,
                                                 const ToyTrainConfig& config,
                                                 ToyTrainReport* report = nullptr);

// Monte Carlo estimate of the eps objective E ||eps_hat - eps||^2 / n for one
// clean image (unit range).
double epsilon_loss(const Denoiser& denoiser, const ImageTensor& x0_unit,
                    const NoiseSchedule& schedule, int draws, uint64_t seed);

}  // namespace relight
