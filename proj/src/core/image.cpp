#include "relight/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace relight {

ImageTensor& ImageTensor::clamp_to_range() {
    const double a = lo();
    for (double& v : data_) v = std::clamp(v, a, 1.0);
    return *this;
}

ImageTensor ImageTensor::to_unit() const {
    if (range_ == Range::Unit) return *this;
    ImageTensor out(h_, w_, c_, Range::Unit);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = 0.5 * (data_[i] + 1.0);
    return out;
}

ImageTensor ImageTensor::to_symmetric() const {
    if (range_ == Range::Symmetric) return *this;
    ImageTensor out(h_, w_, c_, Range::Symmetric);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = 2.0 * data_[i] - 1.0;
    return out;
}

double ImageTensor::l2_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double ImageTensor::mean() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return data_.empty() ? 0.0 : s / static_cast<double>(data_.size());
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                        const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch (" +
                         std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                         "x" + std::to_string(a.channels()) + " vs " +
                         std::to_string(b.height()) + "x" + std::to_string(b.width()) +
                         "x" + std::to_string(b.channels()) + ")");
}

double l2_distance(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "l2_distance");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace relight
