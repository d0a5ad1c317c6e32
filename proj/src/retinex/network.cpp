#include "relight/retinex/network.hpp"

#include <algorithm>
#include <cmath>

#include "relight/nn/checkpoint.hpp"

namespace relight {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

nn::FeatureMap to_feature_map(const ImageTensor& img) {
    nn::FeatureMap fm(img.channels(), img.height(), img.width());
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) fm.at(c, y, x) = img.at(y, x, c);
    return fm;
}

ImageTensor probe_image() {
    ImageTensor probe(16, 16, 3, Range::Unit);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const double base = 0.15 + 0.25 * std::sin(0.5 * x) * std::sin(0.4 * y);
            probe.at(y, x, 0) = 0.20 + 0.5 * base;
            probe.at(y, x, 1) = 0.25 + 0.4 * base;
            probe.at(y, x, 2) = 0.15 + 0.3 * base;
        }
    return probe;
}

}  // namespace

NetworkDecomposer::NetworkDecomposer(nn::ConvNet net, double floor, double tolerance)
    : net_(std::move(net)), floor_(floor), tolerance_(tolerance) {
    if (floor_ <= 0.0 || floor_ >= 1.0)
        throw ConfigError("decomposer floor must be in (0, 1)");
}

Decomposition NetworkDecomposer::decompose(const ImageTensor& img) const {
    const int h = img.height(), w = img.width(), c = img.channels();
    const nn::FeatureMap z = net_.forward(to_feature_map(img));

    Decomposition d{ImageTensor(h, w, c, Range::Unit), ImageTensor(h, w, 1, Range::Unit)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double L = floor_ + (1.0 - floor_) * sigmoid(z.at(0, y, x));
            d.illumination.at(y, x, 0) = L;
            for (int ch = 0; ch < c; ++ch)
                d.reflectance.at(y, x, ch) = std::clamp(img.at(y, x, ch) / L, 0.0, 1.0);
        }
    return d;
}

ImageTensor NetworkDecomposer::reflectance_vjp(const ImageTensor& img,
                                               const ImageTensor& grad_reflectance) const {
    require_same_shape(img, grad_reflectance, "reflectance_vjp");
    const int h = img.height(), w = img.width(), c = img.channels();

    nn::ConvNet::Cache cache;
    const nn::FeatureMap z = net_.forward_cached(to_feature_map(img), cache);

    ImageTensor d_img = ImageTensor::zeros_like(img);
    nn::FeatureMap d_z(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double s = sigmoid(z.at(0, y, x));
            const double L = floor_ + (1.0 - floor_) * s;
            double g_L = 0.0;
            for (int ch = 0; ch < c; ++ch) {
                const double raw = img.at(y, x, ch) / L;
                if (raw >= 1.0) continue;
                const double g = grad_reflectance.at(y, x, ch);
                d_img.at(y, x, ch) += g / L;
                g_L -= g * img.at(y, x, ch) / (L * L);
            }
            d_z.at(0, y, x) = g_L * (1.0 - floor_) * s * (1.0 - s);
        }

    nn::NetGrads grads = net_.zero_grads();
    const nn::FeatureMap d_in = net_.backward(cache, d_z, grads);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) d_img.at(y, x, ch) += d_in.at(ch, y, x);
    return d_img;
}

void save_decomposer_network(const std::filesystem::path& path, const nn::ConvNet& net,
                             double floor, double tolerance) {
    nn::Container c;
    c.kind = "retinex_decomposer";
    c.meta = {{"channels", net.spec().in_ch},
              {"hidden", net.spec().hidden},
              {"conv_layers", net.spec().conv_layers},
              {"kernel", net.spec().kernel},
              {"floor", floor},
              {"reconstruction_tolerance", tolerance}};
    for (size_t i = 0; i < net.layers().size(); ++i) {
        c.tensors.emplace_back("conv" + std::to_string(i) + ".weight",
                               net.layers()[i].weight);
        c.tensors.emplace_back("conv" + std::to_string(i) + ".bias",
                               net.layers()[i].bias);
    }
    nn::save_container(path, c);
}

DecomposerHandle load_decomposer_network(const std::filesystem::path& path) {
    const nn::Container c = nn::load_container(path);
    if (c.kind != "retinex_decomposer")
        throw LoadError("checkpoint kind '" + c.kind + "' is not a retinex decomposer");

    nn::NetSpec spec;
    spec.in_ch = c.meta.at("channels").get<int>();
    spec.out_ch = 1;
    spec.hidden = c.meta.at("hidden").get<int>();
    spec.conv_layers = c.meta.at("conv_layers").get<int>();
    spec.kernel = c.meta.at("kernel").get<int>();

    nn::ConvNet net(spec);
    for (size_t i = 0; i < net.layers().size(); ++i) {
        auto& l = net.layers()[i];
        const auto& w = c.tensor("conv" + std::to_string(i) + ".weight");
        const auto& b = c.tensor("conv" + std::to_string(i) + ".bias");
        if (w.size() != l.weight.size() || b.size() != l.bias.size())
            throw LoadError("decomposer tensor size mismatch at conv" + std::to_string(i));
        l.weight = w;
        l.bias = b;
    }

    const double floor = c.meta.at("floor").get<double>();
    const double tolerance = c.meta.at("reconstruction_tolerance").get<double>();
    auto handle = std::make_shared<NetworkDecomposer>(std::move(net), floor, tolerance);

    // Verify the declared tolerance on a probe before handing the model out.
    const ImageTensor probe = probe_image();
    const Decomposition d = handle->decompose(probe);
    double err2 = 0.0, ref2 = 0.0;
    for (int y = 0; y < probe.height(); ++y)
        for (int x = 0; x < probe.width(); ++x)
            for (int ch = 0; ch < 3; ++ch) {
                const double rec =
                    d.reflectance.at(y, x, ch) * d.illumination.at(y, x, 0);
                const double diff = rec - probe.at(y, x, ch);
                err2 += diff * diff;
                ref2 += probe.at(y, x, ch) * probe.at(y, x, ch);
            }
    const double rel = std::sqrt(err2 / ref2);
    if (rel > tolerance)
        throw LoadError("decomposer reconstruction error " + std::to_string(rel) +
                        " exceeds declared tolerance " + std::to_string(tolerance));
    return handle;
}

}  // namespace relight
