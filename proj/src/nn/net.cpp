#include "relight/nn/net.hpp"

#include <cmath>
#include <cstring>

namespace relight::nn {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

Conv2d::Conv2d(int in, int out, int ksize)
    : in_ch(in), out_ch(out), k(ksize),
      weight(static_cast<size_t>(out) * in * ksize * ksize, 0.0),
      bias(out, 0.0) {}

FeatureMap Conv2d::forward(const FeatureMap& x) const {
    const int r = k / 2;
    FeatureMap out(out_ch, x.h, x.w);
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int y = 0; y < x.h; ++y) {
            for (int xx = 0; xx < x.w; ++xx) {
                double acc = bias[oc];
                for (int ic = 0; ic < in_ch; ++ic) {
                    for (int dy = 0; dy < k; ++dy) {
                        const int sy = y + dy - r;
                        if (sy < 0 || sy >= x.h) continue;
                        for (int dx = 0; dx < k; ++dx) {
                            const int sx = xx + dx - r;
                            if (sx < 0 || sx >= x.w) continue;
                            acc += weight[weight_index(oc, ic, dy, dx)] * x.at(ic, sy, sx);
                        }
                    }
                }
                out.at(oc, y, xx) = acc;
            }
        }
    }
    return out;
}

FeatureMap Conv2d::backward(const FeatureMap& input, const FeatureMap& d_out,
                            std::vector<double>& d_weight,
                            std::vector<double>& d_bias) const {
    const int r = k / 2;
    FeatureMap d_in(in_ch, input.h, input.w);
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int y = 0; y < input.h; ++y) {
            for (int xx = 0; xx < input.w; ++xx) {
                const double g = d_out.at(oc, y, xx);
                if (g == 0.0) continue;
                d_bias[oc] += g;
                for (int ic = 0; ic < in_ch; ++ic) {
                    for (int dy = 0; dy < k; ++dy) {
                        const int sy = y + dy - r;
                        if (sy < 0 || sy >= input.h) continue;
                        for (int dx = 0; dx < k; ++dx) {
                            const int sx = xx + dx - r;
                            if (sx < 0 || sx >= input.w) continue;
                            d_weight[weight_index(oc, ic, dy, dx)] += g * input.at(ic, sy, sx);
                            d_in.at(ic, sy, sx) += g * weight[weight_index(oc, ic, dy, dx)];
                        }
                    }
                }
            }
        }
    }
    return d_in;
}

ConvNet::ConvNet(const NetSpec& spec) : spec_(spec) {
    int in = spec.in_ch;
    for (int i = 0; i < spec.conv_layers; ++i) {
        const bool last = i + 1 == spec.conv_layers;
        const int out = last ? spec.out_ch : spec.hidden;
        layers_.emplace_back(in, out, spec.kernel);
        in = out;
    }
}

void ConvNet::init(Rng& rng, bool zero_last) {
    for (size_t i = 0; i < layers_.size(); ++i) {
        Conv2d& l = layers_[i];
        const double std = std::sqrt(2.0 / (static_cast<double>(l.in_ch) * l.k * l.k));
        const bool zero = zero_last && i + 1 == layers_.size();
        for (double& w : l.weight) w = zero ? 0.0 : std * rng.gaussian();
        for (double& b : l.bias) b = 0.0;
    }
}

FeatureMap ConvNet::forward(const FeatureMap& x) const {
    FeatureMap cur = x;
    for (size_t i = 0; i < layers_.size(); ++i) {
        cur = layers_[i].forward(cur);
        if (i + 1 < layers_.size())
            for (double& v : cur.v) v = silu(v);
    }
    return cur;
}

FeatureMap ConvNet::forward_cached(const FeatureMap& x, Cache& cache) const {
    cache.inputs.clear();
    cache.pre_activations.clear();
    FeatureMap cur = x;
    for (size_t i = 0; i < layers_.size(); ++i) {
        cache.inputs.push_back(cur);
        cur = layers_[i].forward(cur);
        cache.pre_activations.push_back(cur);
        if (i + 1 < layers_.size())
            for (double& v : cur.v) v = silu(v);
    }
    return cur;
}

FeatureMap ConvNet::backward(const Cache& cache, const FeatureMap& d_out,
                             NetGrads& grads) const {
    FeatureMap g = d_out;
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
        if (i + 1 < static_cast<int>(layers_.size())) {
            const FeatureMap& z = cache.pre_activations[i];
            for (size_t j = 0; j < g.v.size(); ++j) g.v[j] *= silu_grad(z.v[j]);
        }
        g = layers_[i].backward(cache.inputs[i], g, grads.weight[i], grads.bias[i]);
    }
    return g;
}

FeatureMap ConvNet::input_grad(const FeatureMap& x, const FeatureMap& d_out) const {
    Cache cache;
    forward_cached(x, cache);
    NetGrads grads = zero_grads();
    return backward(cache, d_out, grads);
}

NetGrads ConvNet::zero_grads() const {
    NetGrads g;
    for (const Conv2d& l : layers_) {
        g.weight.emplace_back(l.weight.size(), 0.0);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

size_t ConvNet::param_count() const {
    size_t n = 0;
    for (const Conv2d& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> ConvNet::flat_params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (const Conv2d& l : layers_) {
        p.insert(p.end(), l.weight.begin(), l.weight.end());
        p.insert(p.end(), l.bias.begin(), l.bias.end());
    }
    return p;
}

void ConvNet::set_flat_params(const std::vector<double>& p) {
    size_t off = 0;
    for (Conv2d& l : layers_) {
        std::copy(p.begin() + off, p.begin() + off + l.weight.size(), l.weight.begin());
        off += l.weight.size();
        std::copy(p.begin() + off, p.begin() + off + l.bias.size(), l.bias.begin());
        off += l.bias.size();
    }
}

std::vector<double> ConvNet::flatten(const NetGrads& g) const {
    std::vector<double> out;
    out.reserve(param_count());
    for (size_t i = 0; i < layers_.size(); ++i) {
        out.insert(out.end(), g.weight[i].begin(), g.weight[i].end());
        out.insert(out.end(), g.bias[i].begin(), g.bias[i].end());
    }
    return out;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
}

uint64_t param_checksum(const std::vector<double>& params) {
    uint64_t h = 14695981039346656037ull;
    for (double d : params) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &d, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace relight::nn
