#include "relight/attributes/attributes.hpp"

namespace relight {

AttributeContext make_attribute_context(const ImageTensor& y0,
                                        DecomposerHandle decomposer,
                                        const AttributeWeights& lambdas,
                                        const AttributeToggles& toggles,
                                        int pool_size, PhaseMode phase_mode,
                                        double exposure_amplitude,
                                        double exposure_base,
                                        bool exposure_literal_sign) {
    AttributeContext ctx;
    ctx.reference = y0.to_unit();
    ctx.decomposer = std::move(decomposer);
    ctx.lambdas = lambdas;
    ctx.toggles = toggles;
    ctx.pool_size = pool_size;
    ctx.phase_mode = phase_mode;
    if (toggles.exposure)
        ctx.exposure_target = exposure_map(ctx.reference, exposure_amplitude,
                                           exposure_base, exposure_literal_sign);
    if (toggles.structure) ctx.reference_phase = analyze_phase(ctx.reference);
    if (toggles.color) {
        if (!ctx.decomposer)
            throw ConfigError("colour attribute enabled without a decomposer");
        ctx.reference_reflectance = ctx.decomposer->decompose(ctx.reference).reflectance;
    }
    return ctx;
}

AttributeLossReport total_loss_and_grad(const ImageTensor& x0hat,
                                        const AttributeContext& ctx) {
    AttributeLossReport report;
    report.lambdas = ctx.lambdas;
    report.grad = ImageTensor::zeros_like(x0hat);

    const bool all_lambda_zero = ctx.lambdas.exposure == 0.0 &&
                                 ctx.lambdas.structure == 0.0 &&
                                 ctx.lambdas.color == 0.0;
    report.guidance_noop = ctx.toggles.exposure && ctx.toggles.structure &&
                           ctx.toggles.color && all_lambda_zero;

    ImageTensor part;
    if (ctx.toggles.exposure) {
        report.exposure =
            exposure_loss_grad(x0hat, ctx.exposure_target, ctx.pool_size, part);
        for (size_t i = 0; i < part.size(); ++i)
            report.grad[i] += ctx.lambdas.exposure * part[i];
    }
    if (ctx.toggles.structure) {
        part = ImageTensor::zeros_like(x0hat);
        report.structure = ctx.reference_phase
                               ? phase_loss_precomputed(x0hat, *ctx.reference_phase,
                                                        ctx.phase_mode, &part)
                               : phase_loss_grad(x0hat, ctx.reference,
                                                 ctx.phase_mode, part);
        for (size_t i = 0; i < part.size(); ++i)
            report.grad[i] += ctx.lambdas.structure * part[i];
    }
    if (ctx.toggles.color) {
        if (!ctx.decomposer)
            throw ConfigError("colour attribute enabled without a decomposer");
        part = ImageTensor::zeros_like(x0hat);
        report.color =
            ctx.reference_reflectance
                ? color_loss_precomputed(x0hat, *ctx.reference_reflectance,
                                         *ctx.decomposer, &part)
                : color_loss_grad(x0hat, ctx.reference, *ctx.decomposer, part);
        for (size_t i = 0; i < part.size(); ++i)
            report.grad[i] += ctx.lambdas.color * part[i];
    }

    report.total = ctx.lambdas.exposure * report.exposure +
                   ctx.lambdas.structure * report.structure +
                   ctx.lambdas.color * report.color;
    return report;
}

}  // namespace relight
