#pragma once

#include <complex>
#include <vector>

namespace relight {

// 2D spectrum of a single real plane, row-major, size h*w.
struct Spectrum {
    int h = 0, w = 0;
    std::vector<std::complex<double>> v;

    std::complex<double>& at(int u, int x) { return v[static_cast<size_t>(u) * w + x]; }
    const std::complex<double>& at(int u, int x) const {
        return v[static_cast<size_t>(u) * w + x];
    }
};

// Forward 2D DFT, no normalization: F(u,v) = sum f(y,x) e^{-2pi i (uy/H + vx/W)}.
Spectrum dft2(const std::vector<double>& plane, int h, int w);

// Inverse 2D DFT with 1/(HW) normalization; returns the real part.
std::vector<double> idft2_real(const Spectrum& s);

// Adjoint of dft2 for real inputs: given g = dL/dF (complex, gR + i gI),
// returns dL/df = Re(sum_k g_k e^{+2pi i k.n}) — the unnormalized inverse.
std::vector<double> dft2_adjoint(const Spectrum& g);

}  // namespace relight
