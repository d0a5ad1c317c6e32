#include "relight/sampler/sampler.hpp"

#include <cmath>
#include <string>

namespace relight {

namespace {

constexpr double kGradFloor = 1e-12;

ImageTensor draw(const ImageTensor& mean, double var, Rng& rng) {
    const double sigma = std::sqrt(var);
    ImageTensor x = ImageTensor::zeros_like(mean);
    for (size_t i = 0; i < x.size(); ++i) x[i] = mean[i] + sigma * rng.gaussian();
    return x;
}

ImageTensor draw_shifted(const ImageTensor& mean, double var, double s_hat,
                         const ImageTensor& grad, Rng& rng) {
    const double sigma = std::sqrt(var);
    const double shift = s_hat * var;
    ImageTensor x = ImageTensor::zeros_like(mean);
    for (size_t i = 0; i < x.size(); ++i)
        x[i] = mean[i] - shift * grad[i] + sigma * rng.gaussian();
    return x;
}

bool all_finite(const ImageTensor& img) {
    for (size_t i = 0; i < img.size(); ++i)
        if (!std::isfinite(img[i])) return false;
    return true;
}

// Guidance acts on x0hat in the unit domain; the sampler works in [-1,1], so
// the chain rule contributes a factor of 1/2.
ImageTensor to_symmetric_grad(const ImageTensor& grad_unit) {
    ImageTensor g = grad_unit;
    for (size_t i = 0; i < g.size(); ++i) g[i] *= 0.5;
    g.set_range(Range::Symmetric);
    return g;
}

void check_finite(const AttributeLossReport& report, const ImageTensor& grad, int t) {
    if (std::isfinite(report.total) && all_finite(grad)) return;
    throw NumericError("guided_step t=" + std::to_string(t) +
                       ": non-finite loss or gradient (L1=" +
                       std::to_string(report.exposure) + ", L2=" +
                       std::to_string(report.structure) + ", L3=" +
                       std::to_string(report.color) + ")");
}

}  // namespace

void GuidanceConfig::validate(int schedule_steps) const {
    if (omega < 0 || omega > schedule_steps)
        throw ConfigError("omega must lie in [0, T]; got omega=" +
                          std::to_string(omega) + " with T=" +
                          std::to_string(schedule_steps));
    if (scale < 0.0) throw ConfigError("guidance scale must be >= 0");
    if (grad_steps < 1) throw ConfigError("gradient steps must be >= 1");
    if (max_grad_steps < 1) throw ConfigError("max_grad_steps must be >= 1");
    if (pool_size <= 0) throw ConfigError("pool_size must be positive");
}

bool attribute_guidance_active(const AttributeWeights& lambdas,
                               const AttributeToggles& toggles) {
    return (toggles.exposure && lambdas.exposure != 0.0) ||
           (toggles.structure && lambdas.structure != 0.0) ||
           (toggles.color && lambdas.color != 0.0);
}

DynamicGuidance dynamic_scale_and_steps(const ImageTensor& x_t,
                                        const ImageTensor& x_prev_draw,
                                        const ImageTensor& grad, double s, int N) {
    require_same_shape(x_t, x_prev_draw, "dynamic_scale_and_steps");
    require_same_shape(x_t, grad, "dynamic_scale_and_steps");
    const double grad_norm = grad.l2_norm();
    if (grad_norm < kGradFloor) return DynamicGuidance{0.0, 1};
    const double r = l2_distance(x_t, x_prev_draw) / grad_norm;
    const double n = std::round(r * N);  // half away from zero
    return DynamicGuidance{r * s, std::max(1ll, static_cast<long long>(n))};
}

GuidedStep guided_step(const ImageTensor& x_t_in, int t, const Denoiser& denoiser,
                       const AttributeContext& ctx, const GuidanceConfig& config,
                       const NoiseSchedule& schedule, Rng& rng) {
    if (t < 1 || t > schedule.steps())
        throw StepError("guided_step: t=" + std::to_string(t) + " outside [1, " +
                        std::to_string(schedule.steps()) + "]");

    ImageTensor x_t = x_t_in;
    ImageTensor eps = denoiser.predict(x_t, t);
    Posterior post = posterior_mean_var(x_t, eps, t, schedule);
    ImageTensor x0 = predict_x0(x_t, eps, t, schedule);

    StepRecord rec;
    rec.t = t;

    if (!attribute_guidance_active(ctx.lambdas, ctx.toggles)) {
        // Plain DDPM step; consumes a single noise field.
        ImageTensor x_prev = draw(post.mean, post.var, rng);
        rec.step_delta = l2_distance(x_t, x_prev);
        return GuidedStep{std::move(x_prev), std::move(x0), rec};
    }

    const ImageTensor x_prev_draw = draw(post.mean, post.var, rng);

    AttributeLossReport report = total_loss_and_grad(x0.to_unit(), ctx);
    ImageTensor grad = to_symmetric_grad(report.grad);
    check_finite(report, grad, t);

    rec.exposure = report.exposure;
    rec.structure = report.structure;
    rec.color = report.color;
    rec.total = report.total;
    rec.grad_norm = grad.l2_norm();
    rec.step_delta = l2_distance(x_t, x_prev_draw);

    double s_hat = 0.0;
    long long n_hat = 1;
    if (rec.grad_norm >= kGradFloor) {
        const DynamicGuidance dg =
            dynamic_scale_and_steps(x_t, x_prev_draw, grad, config.scale,
                                    config.grad_steps);
        s_hat = config.static_scale ? config.scale : dg.s_hat;
        n_hat = config.static_steps
                    ? config.grad_steps
                    : std::min<long long>(dg.n_hat, config.max_grad_steps);
    }
    rec.s_hat = s_hat;
    rec.n_hat = n_hat;

    for (long long k = 1; k < n_hat; ++k) {
        x_t = draw_shifted(post.mean, post.var, s_hat, grad, rng);
        eps = denoiser.predict(x_t, t);
        x0 = predict_x0(x_t, eps, t, schedule);
        report = total_loss_and_grad(x0.to_unit(), ctx);
        grad = to_symmetric_grad(report.grad);
        check_finite(report, grad, t);
    }

    ImageTensor x_prev = draw_shifted(post.mean, post.var, s_hat, grad, rng);
    return GuidedStep{std::move(x_prev), std::move(x0), rec};
}

EnhanceResult enhance(const ImageTensor& y0, const Denoiser& denoiser,
                      DecomposerHandle decomposer, const GuidanceConfig& config,
                      const NoiseSchedule& schedule, Rng& rng) {
    config.validate(schedule.steps());
    if (y0.range() != Range::Unit)
        throw ConfigError("enhance expects a unit-range input image");
    if (y0.channels() != 3)
        throw ChannelError("enhance expects an RGB input image");

    const DenoiserInfo& info = denoiser.info();
    if (y0.height() != info.height || y0.width() != info.width ||
        y0.channels() != info.channels)
        throw CompatibilityError(
            "input " + std::to_string(y0.height()) + "x" + std::to_string(y0.width()) +
            "x" + std::to_string(y0.channels()) + " does not match denoiser " +
            std::to_string(info.height) + "x" + std::to_string(info.width) + "x" +
            std::to_string(info.channels));

    EnhanceResult result;
    if (config.omega == 0) {
        result.output = y0;
        return result;
    }

    const bool active = attribute_guidance_active(config.lambdas, config.toggles);
    AttributeContext ctx = make_attribute_context(
        y0, decomposer, config.lambdas,
        active ? config.toggles : AttributeToggles{false, false, false},
        config.pool_size, config.phase_mode, config.exposure_amplitude,
        config.exposure_base, config.exposure_literal_sign);

    const ImageTensor noise =
        rng.gaussian_image(y0.height(), y0.width(), y0.channels(), Range::Symmetric);
    ImageTensor x = forward_noise(y0.to_symmetric(), config.omega, schedule, noise);
    ImageTensor x0hat = y0.to_symmetric();

    for (int t = config.omega; t >= 1; --t) {
        GuidedStep step = guided_step(x, t, denoiser, ctx, config, schedule, rng);
        x = std::move(step.x_prev);
        x0hat = std::move(step.x0hat);
        result.trace.steps.push_back(step.record);
    }

    result.output = x0hat.to_unit();
    if (config.clamp_final) result.output.clamp_to_range();
    return result;
}

ImageTensor ddpm_sample(const Denoiser& denoiser, const NoiseSchedule& schedule,
                        int height, int width, int channels, Rng& rng) {
    ImageTensor x = rng.gaussian_image(height, width, channels, Range::Symmetric);
    ImageTensor x0hat = ImageTensor(height, width, channels, Range::Symmetric);
    for (int t = schedule.steps(); t >= 1; --t) {
        const ImageTensor eps = denoiser.predict(x, t);
        x0hat = predict_x0(x, eps, t, schedule);
        const Posterior post = posterior_mean_var(x, eps, t, schedule);
        x = draw(post.mean, post.var, rng);
    }
    return x0hat;
}

}  // namespace relight
