#include "relight/metrics/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "relight/attributes/attributes.hpp"

namespace relight {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> luma_plane(const ImageTensor& img) {
    if (img.channels() == 1) return img.values();
    const ImageTensor y = luminance(img);
    return y.values();
}

std::vector<double> ssim_window() {
    std::vector<double> w(kWindow * kWindow);
    const int r = kWindow / 2;
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double g =
                std::exp(-0.5 * (dy * dy + dx * dx) / (kWindowSigma * kWindowSigma));
            w[(dy + r) * kWindow + dx + r] = g;
            sum += g;
        }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

double psnr(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "ssim");
    const int h = a.height(), w = a.width();
    if (h < kWindow || w < kWindow)
        throw ShapeError("ssim needs images of at least " + std::to_string(kWindow) +
                         "x" + std::to_string(kWindow));

    const std::vector<double> x = luma_plane(a);
    const std::vector<double> y = luma_plane(b);
    const std::vector<double> win = ssim_window();
    const int r = kWindow / 2;

    double total = 0.0;
    long count = 0;
    for (int cy = r; cy < h - r; ++cy) {
        for (int cx = r; cx < w - r; ++cx) {
            double mx = 0.0, my = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double wt = win[(dy + r) * kWindow + dx + r];
                    mx += wt * x[static_cast<size_t>(cy + dy) * w + cx + dx];
                    my += wt * y[static_cast<size_t>(cy + dy) * w + cx + dx];
                }
            double vx = 0.0, vy = 0.0, cov = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double wt = win[(dy + r) * kWindow + dx + r];
                    const double ex = x[static_cast<size_t>(cy + dy) * w + cx + dx] - mx;
                    const double ey = y[static_cast<size_t>(cy + dy) * w + cx + dx] - my;
                    vx += wt * ex * ex;
                    vy += wt * ey * ey;
                    cov += wt * ex * ey;
                }
            total += (2.0 * mx * my + kC1) * (2.0 * cov + kC2) /
                     ((mx * mx + my * my + kC1) * (vx + vy + kC2));
            ++count;
        }
    }
    return total / count;
}

double mean_exposure(const ImageTensor& img) {
    if (img.channels() == 1) return img.mean();
    return luminance(img).mean();
}

}  // namespace relight
