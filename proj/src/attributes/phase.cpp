#include <cmath>

#include "relight/attributes/attributes.hpp"

namespace relight {

namespace {

// Coefficients with |F|^2 below this carry no usable phase; their gradient
// contribution is dropped.
constexpr double kTinyMagnitude = 1e-24;

std::vector<double> channel_plane(const ImageTensor& img, int c) {
    std::vector<double> plane(static_cast<size_t>(img.height()) * img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            plane[static_cast<size_t>(y) * img.width() + x] = img.at(y, x, c);
    return plane;
}

double phase_core(const ImageTensor& x0hat, const PhaseAnalysis& ref, PhaseMode mode,
                  ImageTensor* grad) {
    const int h = x0hat.height(), w = x0hat.width(), c = x0hat.channels();
    const double count = static_cast<double>(c) * h * w;

    double loss = 0.0;
    for (int ch = 0; ch < c; ++ch) {
        const Spectrum sx = dft2(channel_plane(x0hat, ch), h, w);
        Spectrum g_spec;
        if (grad) {
            g_spec.h = h;
            g_spec.w = w;
            g_spec.v.assign(static_cast<size_t>(h) * w, {0.0, 0.0});
        }
        for (size_t i = 0; i < sx.v.size(); ++i) {
            const double re = sx.v[i].real(), im = sx.v[i].imag();
            const double px = std::atan2(im, re);
            const double dp = px - ref.phase[ch][i];
            double dl_dp;
            if (mode == PhaseMode::Raw) {
                loss += dp * dp / count;
                dl_dp = 2.0 * dp / count;
            } else {
                loss += (2.0 - 2.0 * std::cos(dp)) / count;
                dl_dp = 2.0 * std::sin(dp) / count;
            }
            if (grad) {
                const double mag2 = re * re + im * im;
                if (mag2 < kTinyMagnitude) continue;
                // d atan2(im, re) = (-im dre + re dim) / |F|^2
                g_spec.v[i] = {dl_dp * (-im / mag2), dl_dp * (re / mag2)};
            }
        }
        if (grad) {
            const std::vector<double> g_plane = dft2_adjoint(g_spec);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    grad->at(y, x, ch) += g_plane[static_cast<size_t>(y) * w + x];
        }
    }
    return loss;
}

}  // namespace

PhaseAnalysis analyze_phase(const ImageTensor& img) {
    PhaseAnalysis a;
    for (int c = 0; c < img.channels(); ++c) {
        Spectrum s = dft2(channel_plane(img, c), img.height(), img.width());
        std::vector<double> phase(s.v.size());
        for (size_t i = 0; i < s.v.size(); ++i)
            phase[i] = std::atan2(s.v[i].imag(), s.v[i].real());
        a.spectra.push_back(std::move(s));
        a.phase.push_back(std::move(phase));
    }
    return a;
}

double phase_loss(const ImageTensor& x0hat, const ImageTensor& y0, PhaseMode mode) {
    require_same_shape(x0hat, y0, "phase_loss");
    return phase_core(x0hat, analyze_phase(y0), mode, nullptr);
}

double phase_loss_grad(const ImageTensor& x0hat, const ImageTensor& y0,
                       PhaseMode mode, ImageTensor& grad) {
    require_same_shape(x0hat, y0, "phase_loss");
    grad = ImageTensor::zeros_like(x0hat);
    return phase_core(x0hat, analyze_phase(y0), mode, &grad);
}

double phase_loss_precomputed(const ImageTensor& x0hat, const PhaseAnalysis& ref,
                              PhaseMode mode, ImageTensor* grad) {
    return phase_core(x0hat, ref, mode, grad);
}

}  // namespace relight
