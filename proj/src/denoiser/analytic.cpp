#include "relight/denoiser/analytic.hpp"

#include <cmath>

namespace relight {

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(ImageTensor mean, double variance,
                                                   const NoiseSchedule& schedule)
    : mean_(std::move(mean)), variance_(variance), schedule_(schedule) {
    if (variance_ <= 0.0)
        throw ConfigError("analytic denoiser variance must be > 0");
    info_ = DenoiserInfo{mean_.height(), mean_.width(), mean_.channels(),
                         schedule_.steps(), "analytic_gaussian"};
}

ImageTensor AnalyticGaussianDenoiser::predict(const ImageTensor& x_t, int t) const {
    require_same_shape(x_t, mean_, "analytic denoiser");
    const double ab = schedule_.alpha_bar(t);
    if (t < 1) throw StepError("analytic denoiser: t must be >= 1");
    const double sa = std::sqrt(ab);
    const double coef = std::sqrt(1.0 - ab) / (ab * variance_ + 1.0 - ab);
    ImageTensor eps = ImageTensor::zeros_like(x_t);
    for (size_t i = 0; i < x_t.size(); ++i)
        eps[i] = coef * (x_t[i] - sa * mean_[i]);
    return eps;
}

}  // namespace relight
