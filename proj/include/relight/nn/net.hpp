#pragma once

#include <cstddef>
#include <vector>

#include "relight/core/rng.hpp"

namespace relight::nn {

// C x H x W feature map (channel-planar, unlike ImageTensor's interleaved
// layout — convolution loops want contiguous planes).
struct FeatureMap {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    FeatureMap() = default;
    FeatureMap(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0) {}

    double& at(int ch, int y, int x) {
        return v[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    double at(int ch, int y, int x) const {
        return v[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    size_t size() const { return v.size(); }
};

// Square odd-sized kernel, stride 1, zero padding (same-size output).
struct Conv2d {
    int in_ch = 0, out_ch = 0, k = 3;
    std::vector<double> weight;  // [out][in][k][k]
    std::vector<double> bias;    // [out]

    Conv2d() = default;
    Conv2d(int in, int out, int ksize);

    FeatureMap forward(const FeatureMap& x) const;

    // Accumulates dW/dB and returns the input gradient.
    FeatureMap backward(const FeatureMap& input, const FeatureMap& d_out,
                        std::vector<double>& d_weight,
                        std::vector<double>& d_bias) const;

    size_t weight_index(int oc, int ic, int dy, int dx) const {
        return ((static_cast<size_t>(oc) * in_ch + ic) * k + dy) * k + dx;
    }
};

struct NetSpec {
    int in_ch = 3;
    int out_ch = 3;
    int hidden = 32;
    int conv_layers = 4;  // total Conv2d count, SiLU between them
    int kernel = 3;
};

struct NetGrads {
    std::vector<std::vector<double>> weight;
    std::vector<std::vector<double>> bias;
};

// Plain conv stack: conv -> SiLU -> ... -> conv (no activation after last).
class ConvNet {
public:
    ConvNet() = default;
    explicit ConvNet(const NetSpec& spec);

    const NetSpec& spec() const { return spec_; }
    std::vector<Conv2d>& layers() { return layers_; }
    const std::vector<Conv2d>& layers() const { return layers_; }

    // He-style Gaussian init; zero_last zeroes the final layer's weights so an
    // untrained net outputs its (zero) bias.
    void init(Rng& rng, bool zero_last);

    FeatureMap forward(const FeatureMap& x) const;

    struct Cache {
        std::vector<FeatureMap> inputs;       // input to each conv layer
        std::vector<FeatureMap> pre_activations;  // conv outputs before SiLU
    };
    FeatureMap forward_cached(const FeatureMap& x, Cache& cache) const;

    // Backprop from d_out; accumulates parameter grads, returns input grad.
    FeatureMap backward(const Cache& cache, const FeatureMap& d_out,
                        NetGrads& grads) const;

    // Input gradient only (parameter grads discarded).
    FeatureMap input_grad(const FeatureMap& x, const FeatureMap& d_out) const;

    NetGrads zero_grads() const;
    size_t param_count() const;
    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& p);
    std::vector<double> flatten(const NetGrads& g) const;

private:
    NetSpec spec_;
    std::vector<Conv2d> layers_;
};

// Standard Adam on a flat parameter vector.
class Adam {
public:
    Adam(size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grads);

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<double> m_, v_;
};

double silu(double x);
double silu_grad(double x);

// FNV-1a over the raw bytes of a double vector; used for determinism checks.
uint64_t param_checksum(const std::vector<double>& params);

}  // namespace relight::nn
