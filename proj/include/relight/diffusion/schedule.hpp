#pragma once

#include <vector>

#include "relight/core/error.hpp"

namespace relight {

// Beta schedule descriptor: linear ramp or constant.
struct BetaSpec {
    enum class Kind { Linear, Constant };

    Kind kind = Kind::Linear;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    static BetaSpec linear(double b0, double b1) {
        return BetaSpec{Kind::Linear, b0, b1};
    }
    static BetaSpec constant(double b) { return BetaSpec{Kind::Constant, b, b}; }
};

// Precomputed beta_t, alpha_t, alpha_bar_t and posterior variances for t in
// [1, T]. alpha_bar(0) is defined as 1 so that noising with t = 0 is the
// identity.
class NoiseSchedule {
public:
    static NoiseSchedule make(int steps, BetaSpec spec);

    int steps() const { return T_; }

    double beta(int t) const { check(t); return betas_[t - 1]; }
    double alpha(int t) const { check(t); return 1.0 - betas_[t - 1]; }

    double alpha_bar(int t) const {
        if (t == 0) return 1.0;
        check(t);
        return alpha_bars_[t - 1];
    }

    // beta_tilde_t = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t,
    // with beta_tilde_1 = beta_1.
    double posterior_var(int t) const { check(t); return posterior_vars_[t - 1]; }

    const BetaSpec& spec() const { return spec_; }

private:
    void check(int t) const {
        if (t < 1 || t > T_)
            throw StepError("timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(T_) + "]");
    }

    int T_ = 0;
    BetaSpec spec_;
    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
    std::vector<double> posterior_vars_;
};

// T=1000, linear(1e-4, 0.02): the convention of common pre-trained denoisers.
NoiseSchedule default_schedule();

}  // namespace relight
