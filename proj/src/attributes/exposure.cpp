#include <algorithm>
#include <cmath>

#include "relight/attributes/attributes.hpp"

namespace relight {

namespace {
constexpr double kLumR = 0.299, kLumG = 0.587, kLumB = 0.114;
}

ImageTensor luminance(const ImageTensor& rgb) {
    if (rgb.channels() != 3)
        throw ChannelError("luminance expects an RGB image, got " +
                           std::to_string(rgb.channels()) + " channel(s)");
    ImageTensor y(rgb.height(), rgb.width(), 1, Range::Unit);
    for (int yy = 0; yy < rgb.height(); ++yy)
        for (int xx = 0; xx < rgb.width(); ++xx)
            y.at(yy, xx, 0) = kLumR * rgb.at(yy, xx, 0) + kLumG * rgb.at(yy, xx, 1) +
                              kLumB * rgb.at(yy, xx, 2);
    return y;
}

ExposureMap exposure_map(const ImageTensor& y0, double amplitude, double base,
                         bool literal_sign) {
    if (amplitude < 0.0) throw ConfigError("exposure amplitude must be >= 0");
    if (base <= 0.0 || base >= 1.0) throw ConfigError("exposure base must be in (0, 1)");

    const ImageTensor Y = luminance(y0);
    const double avg = Y.mean();

    double lo = Y[0] - avg, hi = Y[0] - avg;
    for (size_t i = 0; i < Y.size(); ++i) {
        const double d = Y[i] - avg;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }

    ExposureMap m;
    m.base = base;
    m.amplitude = amplitude;
    m.values = ImageTensor(y0.height(), y0.width(), 1, Range::Unit);
    const double span = hi - lo;
    for (size_t i = 0; i < Y.size(); ++i) {
        // Norm of a constant field is defined as zero.
        const double n = span > 0.0 ? 2.0 * (Y[i] - avg - lo) / span - 1.0 : 0.0;
        m.values[i] = literal_sign ? base + amplitude * n : base - amplitude * n;
    }
    return m;
}

namespace {

struct PoolGrid {
    int pool = 0, cells_y = 0, cells_x = 0;
    int cell_h(int cy, int h) const { return std::min(pool, h - cy * pool); }
    int cell_w(int cx, int w) const { return std::min(pool, w - cx * pool); }
};

PoolGrid make_grid(int h, int w, int pool) {
    if (pool <= 0) throw ConfigError("pool_size must be positive");
    return PoolGrid{pool, (h + pool - 1) / pool, (w + pool - 1) / pool};
}

double cell_mean(const ImageTensor& plane, const PoolGrid& g, int cy, int cx) {
    const int h0 = cy * g.pool, w0 = cx * g.pool;
    const int ch = g.cell_h(cy, plane.height()), cw = g.cell_w(cx, plane.width());
    double s = 0.0;
    for (int y = h0; y < h0 + ch; ++y)
        for (int x = w0; x < w0 + cw; ++x) s += plane.at(y, x, 0);
    return s / (static_cast<double>(ch) * cw);
}

double exposure_core(const ImageTensor& x0hat, const ExposureMap& target,
                     int pool_size, ImageTensor* grad) {
    const ImageTensor Y = luminance(x0hat);
    require_same_shape(Y, target.values, "exposure_loss");
    const PoolGrid g = make_grid(Y.height(), Y.width(), pool_size);
    const double n_cells = static_cast<double>(g.cells_y) * g.cells_x;

    double loss = 0.0;
    for (int cy = 0; cy < g.cells_y; ++cy) {
        for (int cx = 0; cx < g.cells_x; ++cx) {
            const double diff =
                cell_mean(Y, g, cy, cx) - cell_mean(target.values, g, cy, cx);
            loss += diff * diff / n_cells;
            if (grad) {
                const int h0 = cy * g.pool, w0 = cx * g.pool;
                const int ch = g.cell_h(cy, Y.height()), cw = g.cell_w(cx, Y.width());
                const double gy = 2.0 * diff / (n_cells * ch * cw);
                for (int y = h0; y < h0 + ch; ++y)
                    for (int x = w0; x < w0 + cw; ++x) {
                        grad->at(y, x, 0) += gy * kLumR;
                        grad->at(y, x, 1) += gy * kLumG;
                        grad->at(y, x, 2) += gy * kLumB;
                    }
            }
        }
    }
    return loss;
}

}  // namespace

double exposure_loss(const ImageTensor& x0hat, const ExposureMap& target,
                     int pool_size) {
    return exposure_core(x0hat, target, pool_size, nullptr);
}

double exposure_loss_grad(const ImageTensor& x0hat, const ExposureMap& target,
                          int pool_size, ImageTensor& grad) {
    grad = ImageTensor::zeros_like(x0hat);
    return exposure_core(x0hat, target, pool_size, &grad);
}

}  // namespace relight
