#pragma once

#include <filesystem>

#include "relight/denoiser/denoiser.hpp"
#include "relight/nn/net.hpp"

namespace relight {

// Convolutional eps predictor. The network sees the noisy image plus two
// normalized coordinate ramps and a sinusoidal embedding of t broadcast as
// constant channels.
class ConvDenoiser : public Denoiser {
public:
    ConvDenoiser(nn::ConvNet net, DenoiserInfo info, int time_embed_channels,
                 bool coord_channels);

    ImageTensor predict(const ImageTensor& x_t, int t) const override;
    const DenoiserInfo& info() const override { return info_; }

    nn::ConvNet& net() { return net_; }
    const nn::ConvNet& net() const { return net_; }
    int time_embed_channels() const { return time_embed_; }
    bool coord_channels() const { return coords_; }

    // Network input for (x_t, t); exposed for the training loop.
    nn::FeatureMap assemble_input(const ImageTensor& x_t, int t) const;
    ImageTensor output_to_image(const nn::FeatureMap& out, Range range) const;

    void save(const std::filesystem::path& path) const;
    static std::shared_ptr<ConvDenoiser> load(const std::filesystem::path& path);

private:
    nn::ConvNet net_;
    DenoiserInfo info_;
    int time_embed_ = 8;
    bool coords_ = true;
};

// Sinusoidal timestep features, length `channels` (even).
std::vector<double> timestep_embedding(int t, int channels);

}  // namespace relight
