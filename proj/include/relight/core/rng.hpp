#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "relight/core/image.hpp"

namespace relight {

// Deterministic Gaussian/uniform source. Box-Muller on top of mt19937_64 so
// the draw sequence does not depend on the standard library's
// normal_distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    double gaussian();

    void fill_gaussian(ImageTensor& img) {
        for (double& v : img.values()) v = gaussian();
    }

    ImageTensor gaussian_image(int h, int w, int c, Range range) {
        ImageTensor img(h, w, c, range);
        fill_gaussian(img);
        return img;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable 64-bit FNV-1a; used to derive per-image seeds from filenames.
uint64_t fnv1a64(std::string_view s);

}  // namespace relight
