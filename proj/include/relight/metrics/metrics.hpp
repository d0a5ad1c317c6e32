#pragma once

#include <string>

#include "relight/core/image.hpp"

namespace relight {

// 10 log10(1 / MSE) for unit-range images; +infinity when identical.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Mean local SSIM on luminance: 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range 1, valid windows only.
double ssim(const ImageTensor& a, const ImageTensor& b);

// Global mean of luminance.
double mean_exposure(const ImageTensor& img);

struct MetricReport {
    std::string id;
    double psnr = 0.0;  // +inf marker for identical images
    double ssim = 0.0;
    double mean_exposure = 0.0;
};

}  // namespace relight
