#include "relight/diffusion/process.hpp"

#include <cmath>

namespace relight {

ImageTensor forward_noise(const ImageTensor& x0, int t, const NoiseSchedule& schedule,
                          const ImageTensor& noise) {
    require_same_shape(x0, noise, "forward_noise");
    const double ab = schedule.alpha_bar(t);
    const double sa = std::sqrt(ab);
    const double sn = std::sqrt(1.0 - ab);
    ImageTensor out = ImageTensor::zeros_like(x0);
    for (size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + sn * noise[i];
    return out;
}

ImageTensor predict_x0(const ImageTensor& x_t, const ImageTensor& eps, int t,
                       const NoiseSchedule& schedule, bool clamp) {
    require_same_shape(x_t, eps, "predict_x0");
    const double ab = schedule.alpha_bar(t);
    if (t < 1) throw StepError("predict_x0: timestep must be >= 1");
    const double inv_sa = 1.0 / std::sqrt(ab);
    const double sn = std::sqrt(1.0 - ab);
    ImageTensor out = ImageTensor::zeros_like(x_t);
    for (size_t i = 0; i < x_t.size(); ++i)
        out[i] = inv_sa * (x_t[i] - sn * eps[i]);
    if (clamp) out.clamp_to_range();
    return out;
}

Posterior posterior_mean_var(const ImageTensor& x_t, const ImageTensor& eps, int t,
                             const NoiseSchedule& schedule) {
    require_same_shape(x_t, eps, "posterior_mean_var");
    if (t < 1)
        throw StepError("posterior_mean_var: reverse loop ends at t = 1");
    const double beta = schedule.beta(t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
    const double coef = beta / std::sqrt(1.0 - schedule.alpha_bar(t));

    Posterior p{ImageTensor::zeros_like(x_t), schedule.posterior_var(t)};
    for (size_t i = 0; i < x_t.size(); ++i)
        p.mean[i] = inv_sqrt_alpha * (x_t[i] - coef * eps[i]);
    return p;
}

}  // namespace relight
