#include "relight/core/dft.hpp"

#include <cmath>

namespace relight {

namespace {

using cd = std::complex<double>;

std::vector<cd> twiddles(int n, double sign) {
    std::vector<cd> t(n);
    for (int m = 0; m < n; ++m) {
        const double a = sign * 2.0 * M_PI * m / n;
        t[m] = cd(std::cos(a), std::sin(a));
    }
    return t;
}

// In-place row-column transform; sign = -1 forward, +1 inverse (unnormalized).
void transform2(std::vector<cd>& v, int h, int w, double sign) {
    const auto tw = twiddles(w, sign);
    const auto th = twiddles(h, sign);
    std::vector<cd> line(std::max(h, w));

    for (int y = 0; y < h; ++y) {
        cd* row = v.data() + static_cast<size_t>(y) * w;
        for (int k = 0; k < w; ++k) {
            cd acc(0.0, 0.0);
            for (int x = 0; x < w; ++x) acc += row[x] * tw[(static_cast<long long>(k) * x) % w];
            line[k] = acc;
        }
        for (int k = 0; k < w; ++k) row[k] = line[k];
    }
    for (int x = 0; x < w; ++x) {
        for (int k = 0; k < h; ++k) {
            cd acc(0.0, 0.0);
            for (int y = 0; y < h; ++y)
                acc += v[static_cast<size_t>(y) * w + x] * th[(static_cast<long long>(k) * y) % h];
            line[k] = acc;
        }
        for (int k = 0; k < h; ++k) v[static_cast<size_t>(k) * w + x] = line[k];
    }
}

}  // namespace

Spectrum dft2(const std::vector<double>& plane, int h, int w) {
    Spectrum s;
    s.h = h;
    s.w = w;
    s.v.assign(plane.begin(), plane.end());
    transform2(s.v, h, w, -1.0);
    return s;
}

std::vector<double> idft2_real(const Spectrum& s) {
    std::vector<cd> v = s.v;
    transform2(v, s.h, s.w, +1.0);
    std::vector<double> out(v.size());
    const double scale = 1.0 / (static_cast<double>(s.h) * s.w);
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i].real() * scale;
    return out;
}

std::vector<double> dft2_adjoint(const Spectrum& g) {
    std::vector<cd> v = g.v;
    transform2(v, g.h, g.w, +1.0);
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
    return out;
}

}  // namespace relight
