#pragma once

#include <cmath>
#include <functional>

#include "relight/core/image.hpp"
#include "relight/core/rng.hpp"

namespace testutil {

using relight::ImageTensor;
using relight::Range;
using relight::Rng;

inline ImageTensor random_image(uint64_t seed, int h, int w, int c, double lo = 0.0,
                                double hi = 1.0) {
    Rng rng(seed);
    ImageTensor img(h, w, c, Range::Unit);
    for (double& v : img.values()) v = lo + (hi - lo) * rng.uniform();
    return img;
}

// Central finite differences of a scalar functional, element by element.
inline ImageTensor fd_grad(const ImageTensor& x,
                           const std::function<double(const ImageTensor&)>& f,
                           double step = 1e-4) {
    ImageTensor g = ImageTensor::zeros_like(x);
    ImageTensor probe = x;
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + step;
        const double fp = f(probe);
        probe[i] = orig - step;
        const double fm = f(probe);
        probe[i] = orig;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

// Max relative error with near-zero components measured against the overall
// gradient scale.
inline double max_rel_err(const ImageTensor& analytic, const ImageTensor& reference) {
    double scale = 0.0;
    for (size_t i = 0; i < reference.size(); ++i)
        scale = std::max(scale, std::abs(reference[i]));
    const double floor = std::max(1e-3 * scale, 1e-12);
    double worst = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double denom =
            std::max({std::abs(analytic[i]), std::abs(reference[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - reference[i]) / denom);
    }
    return worst;
}

inline bool images_equal(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_shape(b)) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

// Synthetic dark test image: low-valued noise with a brighter patch.
inline ImageTensor dark_image(uint64_t seed, int size, double lo = 0.05,
                              double hi = 0.15) {
    Rng rng(seed);
    ImageTensor img(size, size, 3, Range::Unit);
    for (double& v : img.values()) v = lo + (hi - lo) * rng.uniform();
    for (int y = size / 4; y < size / 2; ++y)
        for (int x = size / 4; x < size / 2; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = std::min(1.0, img.at(y, x, c) + 0.15);
    return img;
}

}  // namespace testutil
