#pragma once

#include "relight/denoiser/denoiser.hpp"
#include "relight/diffusion/schedule.hpp"

namespace relight {

// Bayes-optimal eps predictor for x0 ~ N(mean, variance I), derived from the
// Gaussian posterior of the forward process:
//
//   x_t | x0 ~ N(sqrt(ab) x0, (1 - ab) I)  =>  per pixel
//   E[x0 | x_t] = m + sqrt(ab) v / (ab v + 1 - ab) * (x_t - sqrt(ab) m)
//   E[eps | x_t] = (x_t - sqrt(ab) E[x0|x_t]) / sqrt(1 - ab)
//                = sqrt(1 - ab) (x_t - sqrt(ab) m) / (ab v + 1 - ab).
//
// Used as an exact oracle when verifying the sampler.
class AnalyticGaussianDenoiser : public Denoiser {
public:
    // mean is in the symmetric range; variance applies per pixel.
    AnalyticGaussianDenoiser(ImageTensor mean, double variance,
                             const NoiseSchedule& schedule);

    ImageTensor predict(const ImageTensor& x_t, int t) const override;
    const DenoiserInfo& info() const override { return info_; }

    const ImageTensor& data_mean() const { return mean_; }
    double data_variance() const { return variance_; }

private:
    ImageTensor mean_;
    double variance_;
    NoiseSchedule schedule_;
    DenoiserInfo info_;
};

}  // namespace relight
