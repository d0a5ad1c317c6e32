#include "relight/denoiser/conv_model.hpp"

#include <cmath>

#include "relight/nn/checkpoint.hpp"

namespace relight {

std::vector<double> timestep_embedding(int t, int channels) {
    std::vector<double> e(channels);
    const int half = channels / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        e[2 * i] = std::sin(t * freq);
        e[2 * i + 1] = std::cos(t * freq);
    }
    return e;
}

ConvDenoiser::ConvDenoiser(nn::ConvNet net, DenoiserInfo info, int time_embed_channels,
                           bool coord_channels)
    : net_(std::move(net)), info_(std::move(info)), time_embed_(time_embed_channels),
      coords_(coord_channels) {}

nn::FeatureMap ConvDenoiser::assemble_input(const ImageTensor& x_t, int t) const {
    const int c = x_t.channels(), h = x_t.height(), w = x_t.width();
    const int extra = (coords_ ? 2 : 0) + time_embed_;
    nn::FeatureMap in(c + extra, h, w);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) in.at(ch, y, x) = x_t.at(y, x, ch);
    int next = c;
    if (coords_) {
        for (int y = 0; y < h; ++y) {
            const double yy = h > 1 ? 2.0 * y / (h - 1) - 1.0 : 0.0;
            for (int x = 0; x < w; ++x) {
                const double xx = w > 1 ? 2.0 * x / (w - 1) - 1.0 : 0.0;
                in.at(next, y, x) = yy;
                in.at(next + 1, y, x) = xx;
            }
        }
        next += 2;
    }
    const auto emb = timestep_embedding(t, time_embed_);
    for (int i = 0; i < time_embed_; ++i)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) in.at(next + i, y, x) = emb[i];
    return in;
}

ImageTensor ConvDenoiser::output_to_image(const nn::FeatureMap& out, Range range) const {
    ImageTensor img(out.h, out.w, out.c, range);
    for (int ch = 0; ch < out.c; ++ch)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) img.at(y, x, ch) = out.at(ch, y, x);
    return img;
}

ImageTensor ConvDenoiser::predict(const ImageTensor& x_t, int t) const {
    if (x_t.height() != info_.height || x_t.width() != info_.width ||
        x_t.channels() != info_.channels)
        throw CompatibilityError(
            "denoiser expects " + std::to_string(info_.height) + "x" +
            std::to_string(info_.width) + "x" + std::to_string(info_.channels) +
            ", got " + std::to_string(x_t.height()) + "x" +
            std::to_string(x_t.width()) + "x" + std::to_string(x_t.channels()));
    const nn::FeatureMap out = net_.forward(assemble_input(x_t, t));
    return output_to_image(out, x_t.range());
}

void ConvDenoiser::save(const std::filesystem::path& path) const {
    nn::Container c;
    c.kind = "toy_denoiser";
    c.meta = {{"height", info_.height},
              {"width", info_.width},
              {"channels", info_.channels},
              {"schedule_steps", info_.schedule_steps},
              {"hidden", net_.spec().hidden},
              {"conv_layers", net_.spec().conv_layers},
              {"kernel", net_.spec().kernel},
              {"time_embed", time_embed_},
              {"coord_channels", coords_}};
    for (size_t i = 0; i < net_.layers().size(); ++i) {
        const auto& l = net_.layers()[i];
        c.tensors.emplace_back("conv" + std::to_string(i) + ".weight", l.weight);
        c.tensors.emplace_back("conv" + std::to_string(i) + ".bias", l.bias);
    }
    nn::save_container(path, c);
}

std::shared_ptr<ConvDenoiser> ConvDenoiser::load(const std::filesystem::path& path) {
    const nn::Container c = nn::load_container(path);
    if (c.kind != "toy_denoiser")
        throw LoadError("checkpoint kind '" + c.kind + "' is not a toy denoiser");

    DenoiserInfo info;
    info.height = c.meta.at("height").get<int>();
    info.width = c.meta.at("width").get<int>();
    info.channels = c.meta.at("channels").get<int>();
    info.schedule_steps = c.meta.at("schedule_steps").get<int>();
    info.kind = "toy";
    const int time_embed = c.meta.at("time_embed").get<int>();
    const bool coords = c.meta.at("coord_channels").get<bool>();

    nn::NetSpec spec;
    spec.in_ch = info.channels + (coords ? 2 : 0) + time_embed;
    spec.out_ch = info.channels;
    spec.hidden = c.meta.at("hidden").get<int>();
    spec.conv_layers = c.meta.at("conv_layers").get<int>();
    spec.kernel = c.meta.at("kernel").get<int>();

    nn::ConvNet net(spec);
    for (size_t i = 0; i < net.layers().size(); ++i) {
        auto& l = net.layers()[i];
        const auto& w = c.tensor("conv" + std::to_string(i) + ".weight");
        const auto& b = c.tensor("conv" + std::to_string(i) + ".bias");
        if (w.size() != l.weight.size() || b.size() != l.bias.size())
            throw LoadError("checkpoint tensor size mismatch at layer " +
                            std::to_string(i));
        l.weight = w;
        l.bias = b;
    }
    return std::make_shared<ConvDenoiser>(std::move(net), info, time_embed, coords);
}

}  // namespace relight
