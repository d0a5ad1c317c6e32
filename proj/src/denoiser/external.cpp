#include "relight/denoiser/external.hpp"

#include <string>

#include "relight/nn/checkpoint.hpp"

namespace relight {

namespace {

int meta_int(const nn::SafeTensorFile& f, const std::string& key) {
    auto it = f.metadata.find(key);
    if (it == f.metadata.end())
        throw LoadError("external checkpoint missing metadata key '" + key + "'");
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw LoadError("external checkpoint metadata '" + key + "' is not an integer");
    }
}

}  // namespace

DenoiserHandle load_external(const std::filesystem::path& path,
                             const NoiseSchedule& schedule,
                             std::optional<int> expected_height,
                             std::optional<int> expected_width,
                             std::optional<int> expected_channels) {
    const nn::SafeTensorFile f = nn::load_safetensors(path);

    DenoiserInfo info;
    info.height = meta_int(f, "height");
    info.width = meta_int(f, "width");
    info.channels = meta_int(f, "channels");
    info.schedule_steps = schedule.steps();
    info.kind = "external";

    auto check = [](const char* what, std::optional<int> expected, int declared) {
        if (expected && *expected != declared)
            throw CompatibilityError(std::string("external checkpoint ") + what +
                                     " mismatch: checkpoint declares " +
                                     std::to_string(declared) + ", caller configured " +
                                     std::to_string(*expected));
    };
    check("height", expected_height, info.height);
    check("width", expected_width, info.width);
    check("channels", expected_channels, info.channels);

    if (auto it = f.metadata.find("schedule_steps"); it != f.metadata.end()) {
        const int declared = meta_int(f, "schedule_steps");
        if (declared != schedule.steps())
            throw CompatibilityError(
                "external checkpoint trained for T=" + std::to_string(declared) +
                ", caller schedule has T=" + std::to_string(schedule.steps()));
        info.schedule_steps = declared;
    }

    const int time_embed = meta_int(f, "time_embed");
    const bool coords = meta_int(f, "coord_channels") != 0;

    nn::NetSpec spec;
    spec.in_ch = info.channels + (coords ? 2 : 0) + time_embed;
    spec.out_ch = info.channels;
    spec.hidden = meta_int(f, "hidden");
    spec.conv_layers = meta_int(f, "conv_layers");
    spec.kernel = meta_int(f, "kernel");

    nn::ConvNet net(spec);
    for (size_t i = 0; i < net.layers().size(); ++i) {
        auto& l = net.layers()[i];
        const auto& w = f.tensor("conv" + std::to_string(i) + ".weight");
        const auto& b = f.tensor("conv" + std::to_string(i) + ".bias");
        if (w.size() != l.weight.size() || b.size() != l.bias.size())
            throw LoadError("external checkpoint tensor size mismatch at conv" +
                            std::to_string(i));
        l.weight = w;
        l.bias = b;
    }
    return std::make_shared<ConvDenoiser>(std::move(net), info, time_embed, coords);
}

}  // namespace relight
