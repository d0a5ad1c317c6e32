#include "relight/denoiser/toy.hpp"

#include <cmath>
#include <string>

#include "relight/diffusion/process.hpp"

namespace relight {

std::shared_ptr<ConvDenoiser> train_toy_denoiser(const std::vector<ImageTensor>& dataset,
                                                 const NoiseSchedule& schedule,
                                                 const ToyTrainConfig& config,
                                                 ToyTrainReport* report) {
    if (dataset.empty()) throw DataError("toy denoiser: empty dataset");
    const int h = dataset[0].height(), w = dataset[0].width(), c = dataset[0].channels();
    for (const auto& img : dataset)
        if (img.height() != h || img.width() != w || img.channels() != c)
            throw DataError("toy denoiser: dataset resolutions differ");

    nn::NetSpec spec;
    spec.in_ch = c + (config.coord_channels ? 2 : 0) + config.time_embed;
    spec.out_ch = c;
    spec.hidden = config.hidden;
    spec.conv_layers = config.conv_layers;

    // Desk-scale budget, checked before any allocation.
    size_t params = 0;
    int in = spec.in_ch;
    for (int i = 0; i < spec.conv_layers; ++i) {
        const int out = i + 1 == spec.conv_layers ? spec.out_ch : spec.hidden;
        params += static_cast<size_t>(in) * out * spec.kernel * spec.kernel + out;
        in = out;
    }
    if (params >= 2'000'000)
        throw ConfigError("toy denoiser parameter budget exceeded: " +
                          std::to_string(params));

    Rng rng(config.seed);
    nn::ConvNet net(spec);
    net.init(rng, /*zero_last=*/true);

    DenoiserInfo info{h, w, c, schedule.steps(), "toy"};
    auto model = std::make_shared<ConvDenoiser>(std::move(net), info,
                                                config.time_embed, config.coord_channels);

    std::vector<ImageTensor> sym;
    sym.reserve(dataset.size());
    for (const auto& img : dataset) sym.push_back(img.to_symmetric());

    auto params = model->net().flat_params();
    nn::Adam adam(params.size(), config.lr);
    const size_t n = static_cast<size_t>(h) * w * c;

    double window_acc = 0.0;
    int window_count = 0;
    if (report) report->window_losses.clear();

    for (int step = 0; step < config.steps; ++step) {
        const int idx = rng.uniform_int(0, static_cast<int>(sym.size()) - 1);
        const int t = rng.uniform_int(1, schedule.steps());
        const ImageTensor noise =
            rng.gaussian_image(h, w, c, Range::Symmetric);
        const ImageTensor x_t = forward_noise(sym[idx], t, schedule, noise);

        nn::ConvNet::Cache cache;
        const nn::FeatureMap in = model->assemble_input(x_t, t);
        const nn::FeatureMap out = model->net().forward_cached(in, cache);

        double loss = 0.0;
        nn::FeatureMap d_out(out.c, out.h, out.w);
        for (int ch = 0; ch < out.c; ++ch)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x) {
                    const double diff = out.at(ch, y, x) - noise.at(y, x, ch);
                    loss += diff * diff;
                    d_out.at(ch, y, x) = 2.0 * diff / static_cast<double>(n);
                }
        loss /= static_cast<double>(n);

        nn::NetGrads grads = model->net().zero_grads();
        model->net().backward(cache, d_out, grads);
        std::vector<double> flat = model->net().flatten(grads);
        // Global-norm clip keeps long overfitting runs from destabilizing.
        double norm2 = 0.0;
        for (double g : flat) norm2 += g * g;
        if (norm2 > 1.0) {
            const double scale = 1.0 / std::sqrt(norm2);
            for (double& g : flat) g *= scale;
        }
        adam.step(params, flat);
        model->net().set_flat_params(params);

        window_acc += loss;
        if (++window_count == config.eval_window) {
            if (report) report->window_losses.push_back(window_acc / window_count);
            window_acc = 0.0;
            window_count = 0;
        }
    }
    if (report) {
        if (window_count > 0)
            report->window_losses.push_back(window_acc / window_count);
        report->checksum = nn::param_checksum(params);
    }
    return model;
}

double epsilon_loss(const Denoiser& denoiser, const ImageTensor& x0_unit,
                    const NoiseSchedule& schedule, int draws, uint64_t seed) {
    Rng rng(seed);
    const ImageTensor x0 = x0_unit.to_symmetric();
    const size_t n = x0.size();
    double total = 0.0;
    for (int i = 0; i < draws; ++i) {
        const int t = rng.uniform_int(1, schedule.steps());
        const ImageTensor noise =
            rng.gaussian_image(x0.height(), x0.width(), x0.channels(), Range::Symmetric);
        const ImageTensor x_t = forward_noise(x0, t, schedule, noise);
        const ImageTensor eps = denoiser.predict(x_t, t);
        double loss = 0.0;
        for (size_t j = 0; j < n; ++j) {
            const double d = eps[j] - noise[j];
            loss += d * d;
        }
        total += loss / static_cast<double>(n);
    }
    return total / draws;
}

}  // namespace relight
