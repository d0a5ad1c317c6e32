#pragma once

#include <memory>
#include <string>

#include "relight/core/image.hpp"

namespace relight {

struct DenoiserInfo {
    int height = 0;
    int width = 0;
    int channels = 0;
    int schedule_steps = 0;  // T the model was built/trained against
    std::string kind;
};

// eps_theta(x_t, t) predictor. Inference is deterministic and shape
// preserving; x_t is in the sampler's symmetric range.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual ImageTensor predict(const ImageTensor& x_t, int t) const = 0;
    virtual const DenoiserInfo& info() const = 0;
};

using DenoiserHandle = std::shared_ptr<const Denoiser>;

}  // namespace relight
