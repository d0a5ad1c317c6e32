#pragma once

#include <filesystem>

#include "relight/nn/net.hpp"
#include "relight/retinex/decomposer.hpp"

namespace relight {

// Trained decomposition network adapter. The checkpoint holds a conv stack
// that predicts an illumination logit plane; L = floor + (1-floor) sigmoid(z)
// and R = clamp01(img / L), so R (x) L reconstructs the input by construction
// wherever the reflectance is unclamped. The whole map is differentiable.
class NetworkDecomposer : public Decomposer {
public:
    NetworkDecomposer(nn::ConvNet net, double floor, double tolerance);

    Decomposition decompose(const ImageTensor& img) const override;
    ImageTensor reflectance_vjp(const ImageTensor& img,
                                const ImageTensor& grad_reflectance) const override;
    bool differentiable() const override { return true; }
    double reconstruction_tolerance() const override { return tolerance_; }

    const nn::ConvNet& net() const { return net_; }

private:
    nn::ConvNet net_;
    double floor_;
    double tolerance_;
};

// Loads a "retinex_decomposer" checkpoint and verifies the declared
// reconstruction tolerance on a deterministic probe image.
DecomposerHandle load_decomposer_network(const std::filesystem::path& path);

// Checkpoint writer (the format consumed by load_decomposer_network).
void save_decomposer_network(const std::filesystem::path& path, const nn::ConvNet& net,
                             double floor, double tolerance);

}  // namespace relight
