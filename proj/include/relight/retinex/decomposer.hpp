#pragma once

#include <memory>

#include "relight/core/image.hpp"

namespace relight {

struct Decomposition {
    ImageTensor reflectance;   // same channel count as input, [0,1]
    ImageTensor illumination;  // single channel, (0,1]
};

// Retinex decomposition provider: R (x) L reconstructs the input within the
// provider's declared tolerance wherever the estimate is in its valid regime
// (above the illumination floor, reflectance unclamped).
class Decomposer {
public:
    virtual ~Decomposer() = default;

    virtual Decomposition decompose(const ImageTensor& img) const = 0;

    // v^T J of the reflectance map: gradient of <grad_reflectance, R(img)>
    // with respect to img. Required by the colour loss.
    virtual ImageTensor reflectance_vjp(const ImageTensor& img,
                                        const ImageTensor& grad_reflectance) const = 0;

    virtual bool differentiable() const = 0;
    virtual double reconstruction_tolerance() const = 0;
};

using DecomposerHandle = std::shared_ptr<const Decomposer>;

// Single-scale Retinex estimate: L = Gaussian-blurred max-over-channels
// clamped below by floor, R = img / L clamped to [0,1]. Smooth and
// analytically differentiable.
Decomposition classical_decompose(const ImageTensor& img, double blur_sigma = 5.0,
                                  double floor = 1e-3);

class ClassicalDecomposer : public Decomposer {
public:
    explicit ClassicalDecomposer(double blur_sigma = 5.0, double floor = 1e-3);

    Decomposition decompose(const ImageTensor& img) const override;
    ImageTensor reflectance_vjp(const ImageTensor& img,
                                const ImageTensor& grad_reflectance) const override;
    bool differentiable() const override { return true; }
    double reconstruction_tolerance() const override { return 1e-6; }

    double blur_sigma() const { return sigma_; }
    double floor() const { return floor_; }

private:
    double sigma_;
    double floor_;
};

// Separable Gaussian blur with replicate padding, and its exact adjoint
// (shared with the decomposer gradients; exposed for tests).
void gaussian_blur_plane(std::vector<double>& plane, int h, int w, double sigma);
void gaussian_blur_plane_adjoint(std::vector<double>& grad, int h, int w, double sigma);

}  // namespace relight
