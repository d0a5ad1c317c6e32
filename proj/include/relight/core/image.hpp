#pragma once

#include <cstddef>
#include <vector>

#include "relight/core/error.hpp"

namespace relight {

// Declared dynamic range of an image. Unit is [0,1] (I/O and losses),
// Symmetric is [-1,1] (sampler-internal).
enum class Range { Unit, Symmetric };

// H x W x C row-major image of doubles. C is 1 (luminance) or 3 (RGB).
class ImageTensor {
public:
    ImageTensor() = default;

    ImageTensor(int height, int width, int channels, Range range = Range::Unit,
                double fill = 0.0)
        : h_(height), w_(width), c_(channels), range_(range),
          data_(static_cast<size_t>(height) * width * channels, fill) {
        if (height < 1 || width < 1)
            throw ShapeError("image dimensions must be >= 1");
        if (channels != 1 && channels != 3)
            throw ShapeError("channel count must be 1 or 3");
    }

    static ImageTensor zeros_like(const ImageTensor& other) {
        return ImageTensor(other.h_, other.w_, other.c_, other.range_);
    }

    int height() const { return h_; }
    int width() const { return w_; }
    int channels() const { return c_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    Range range() const { return range_; }
    void set_range(Range r) { range_ = r; }

    double& at(int y, int x, int c) {
        return data_[(static_cast<size_t>(y) * w_ + x) * c_ + c];
    }
    double at(int y, int x, int c) const {
        return data_[(static_cast<size_t>(y) * w_ + x) * c_ + c];
    }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const ImageTensor& o) const {
        return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
    }

    double lo() const { return range_ == Range::Unit ? 0.0 : -1.0; }
    double hi() const { return 1.0; }

    ImageTensor& clamp_to_range();

    // Range conversions; no-ops when already in the target range.
    ImageTensor to_unit() const;
    ImageTensor to_symmetric() const;

    double l2_norm() const;
    double mean() const;

private:
    int h_ = 0, w_ = 0, c_ = 0;
    Range range_ = Range::Unit;
    std::vector<double> data_;
};

void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                        const char* what);

double l2_distance(const ImageTensor& a, const ImageTensor& b);

}  // namespace relight
