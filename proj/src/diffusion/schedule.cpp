#include "relight/diffusion/schedule.hpp"

namespace relight {

NoiseSchedule NoiseSchedule::make(int steps, BetaSpec spec) {
    if (steps < 1) throw ConfigError("schedule needs at least one step");
    auto valid = [](double b) { return b > 0.0 && b < 1.0; };
    if (!valid(spec.beta_start) || !valid(spec.beta_end))
        throw ConfigError("beta values must lie in (0, 1)");

    NoiseSchedule s;
    s.T_ = steps;
    s.spec_ = spec;
    s.betas_.resize(steps);
    for (int i = 0; i < steps; ++i) {
        if (spec.kind == BetaSpec::Kind::Constant || steps == 1) {
            s.betas_[i] = spec.beta_start;
        } else {
            const double f = static_cast<double>(i) / (steps - 1);
            s.betas_[i] = spec.beta_start + f * (spec.beta_end - spec.beta_start);
        }
    }

    s.alpha_bars_.resize(steps);
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        prod *= 1.0 - s.betas_[i];
        s.alpha_bars_[i] = prod;
    }

    s.posterior_vars_.resize(steps);
    s.posterior_vars_[0] = s.betas_[0];
    for (int i = 1; i < steps; ++i) {
        s.posterior_vars_[i] =
            (1.0 - s.alpha_bars_[i - 1]) / (1.0 - s.alpha_bars_[i]) * s.betas_[i];
    }
    return s;
}

NoiseSchedule default_schedule() {
    return NoiseSchedule::make(1000, BetaSpec::linear(1e-4, 0.02));
}

}  // namespace relight
