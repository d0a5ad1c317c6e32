#include "relight/attributes/attributes.hpp"

namespace relight {

namespace {

double color_core(const ImageTensor& x0hat, const ImageTensor& ref_reflectance,
                  const Decomposer& decomposer, ImageTensor* grad) {
    const Decomposition dx = decomposer.decompose(x0hat);
    require_same_shape(dx.reflectance, ref_reflectance, "color_loss");
    const double n = static_cast<double>(x0hat.size());

    double loss = 0.0;
    ImageTensor d_refl = grad ? ImageTensor::zeros_like(dx.reflectance) : ImageTensor();
    for (size_t i = 0; i < dx.reflectance.size(); ++i) {
        const double diff = dx.reflectance[i] - ref_reflectance[i];
        loss += diff * diff / n;
        if (grad) d_refl[i] = 2.0 * diff / n;
    }
    if (grad) {
        if (!decomposer.differentiable())
            throw ConfigError("colour gradient requires a differentiable decomposer");
        *grad = decomposer.reflectance_vjp(x0hat, d_refl);
    }
    return loss;
}

}  // namespace

double color_loss(const ImageTensor& x0hat, const ImageTensor& y0,
                  const Decomposer& decomposer) {
    require_same_shape(x0hat, y0, "color_loss");
    return color_core(x0hat, decomposer.decompose(y0).reflectance, decomposer, nullptr);
}

double color_loss_grad(const ImageTensor& x0hat, const ImageTensor& y0,
                       const Decomposer& decomposer, ImageTensor& grad) {
    require_same_shape(x0hat, y0, "color_loss");
    return color_core(x0hat, decomposer.decompose(y0).reflectance, decomposer, &grad);
}

double color_loss_precomputed(const ImageTensor& x0hat,
                              const ImageTensor& ref_reflectance,
                              const Decomposer& decomposer, ImageTensor* grad) {
    return color_core(x0hat, ref_reflectance, decomposer, grad);
}

}  // namespace relight
