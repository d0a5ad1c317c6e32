#include "relight/retinex/decomposer.hpp"

#include <algorithm>
#include <cmath>

namespace relight {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> w(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double g = std::exp(-0.5 * k * k / (sigma * sigma));
        w[k + radius] = g;
        sum += g;
    }
    for (double& v : w) v /= sum;
    return w;
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Horizontal then vertical pass; replicate padding.
void blur_pass(std::vector<double>& plane, int h, int w,
               const std::vector<double>& kernel, bool horizontal) {
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> out(plane.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int sy = horizontal ? y : clamp_index(y + k, h);
                const int sx = horizontal ? clamp_index(x + k, w) : x;
                acc += kernel[k + radius] * plane[static_cast<size_t>(sy) * w + sx];
            }
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    plane = std::move(out);
}

void blur_pass_adjoint(std::vector<double>& grad, int h, int w,
                       const std::vector<double>& kernel, bool horizontal) {
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> out(grad.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = grad[static_cast<size_t>(y) * w + x];
            for (int k = -radius; k <= radius; ++k) {
                const int sy = horizontal ? y : clamp_index(y + k, h);
                const int sx = horizontal ? clamp_index(x + k, w) : x;
                out[static_cast<size_t>(sy) * w + sx] += kernel[k + radius] * g;
            }
        }
    }
    grad = std::move(out);
}

struct ClassicalState {
    std::vector<double> max_plane;
    std::vector<int> argmax;
    std::vector<double> blurred;
    std::vector<double> illumination;
};

ClassicalState classical_forward(const ImageTensor& img, double sigma, double floor) {
    const int h = img.height(), w = img.width(), c = img.channels();
    ClassicalState s;
    s.max_plane.resize(static_cast<size_t>(h) * w);
    s.argmax.resize(s.max_plane.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = img.at(y, x, 0);
            int bc = 0;
            for (int ch = 1; ch < c; ++ch) {
                if (img.at(y, x, ch) > best) {
                    best = img.at(y, x, ch);
                    bc = ch;
                }
            }
            s.max_plane[static_cast<size_t>(y) * w + x] = best;
            s.argmax[static_cast<size_t>(y) * w + x] = bc;
        }
    }
    s.blurred = s.max_plane;
    gaussian_blur_plane(s.blurred, h, w, sigma);
    s.illumination.resize(s.blurred.size());
    for (size_t i = 0; i < s.blurred.size(); ++i)
        s.illumination[i] = std::max(s.blurred[i], floor);
    return s;
}

}  // namespace

void gaussian_blur_plane(std::vector<double>& plane, int h, int w, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    blur_pass(plane, h, w, kernel, /*horizontal=*/true);
    blur_pass(plane, h, w, kernel, /*horizontal=*/false);
}

void gaussian_blur_plane_adjoint(std::vector<double>& grad, int h, int w, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    blur_pass_adjoint(grad, h, w, kernel, /*horizontal=*/false);
    blur_pass_adjoint(grad, h, w, kernel, /*horizontal=*/true);
}

Decomposition classical_decompose(const ImageTensor& img, double blur_sigma,
                                  double floor) {
    if (blur_sigma <= 0.0) throw ConfigError("blur_sigma must be > 0");
    if (floor <= 0.0) throw ConfigError("illumination floor must be > 0");
    const int h = img.height(), w = img.width(), c = img.channels();
    const ClassicalState s = classical_forward(img, blur_sigma, floor);

    Decomposition d{ImageTensor(h, w, c, Range::Unit), ImageTensor(h, w, 1, Range::Unit)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double L = s.illumination[static_cast<size_t>(y) * w + x];
            d.illumination.at(y, x, 0) = L;
            for (int ch = 0; ch < c; ++ch)
                d.reflectance.at(y, x, ch) = std::clamp(img.at(y, x, ch) / L, 0.0, 1.0);
        }
    }
    return d;
}

ClassicalDecomposer::ClassicalDecomposer(double blur_sigma, double floor)
    : sigma_(blur_sigma), floor_(floor) {
    if (sigma_ <= 0.0) throw ConfigError("blur_sigma must be > 0");
    if (floor_ <= 0.0) throw ConfigError("illumination floor must be > 0");
}

Decomposition ClassicalDecomposer::decompose(const ImageTensor& img) const {
    return classical_decompose(img, sigma_, floor_);
}

ImageTensor ClassicalDecomposer::reflectance_vjp(const ImageTensor& img,
                                                 const ImageTensor& grad_reflectance) const {
    require_same_shape(img, grad_reflectance, "reflectance_vjp");
    const int h = img.height(), w = img.width(), c = img.channels();
    const ClassicalState s = classical_forward(img, sigma_, floor_);

    ImageTensor d_img = ImageTensor::zeros_like(img);
    std::vector<double> g_illum(static_cast<size_t>(h) * w, 0.0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t p = static_cast<size_t>(y) * w + x;
            const double L = s.illumination[p];
            for (int ch = 0; ch < c; ++ch) {
                const double raw = img.at(y, x, ch) / L;
                if (raw >= 1.0) continue;  // clamp gate
                const double g = grad_reflectance.at(y, x, ch);
                d_img.at(y, x, ch) += g / L;
                g_illum[p] -= g * img.at(y, x, ch) / (L * L);
            }
        }
    }

    // Through the floor clamp and the blur back to the max-channel plane.
    for (size_t p = 0; p < g_illum.size(); ++p)
        if (s.blurred[p] <= floor_) g_illum[p] = 0.0;
    gaussian_blur_plane_adjoint(g_illum, h, w, sigma_);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t p = static_cast<size_t>(y) * w + x;
            d_img.at(y, x, s.argmax[p]) += g_illum[p];
        }
    return d_img;
}

}  // namespace relight
