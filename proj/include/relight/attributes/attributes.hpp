#pragma once

#include <optional>
#include <vector>

#include "relight/core/dft.hpp"
#include "relight/core/image.hpp"
#include "relight/retinex/decomposer.hpp"

namespace relight {

// BT.601 luminance of an RGB image in [0,1].
ImageTensor luminance(const ImageTensor& rgb);

// Spatially variant exposure target derived from the input's luminance
// deviation. Dark pixels receive targets up to base + amplitude, bright ones
// down to base - amplitude; a constant input maps to base everywhere.
struct ExposureMap {
    ImageTensor values;  // H x W x 1
    double base = 0.46;
    double amplitude = 0.25;
};

// literal_sign restores the non-negated orientation (bright pixels get larger
// targets); the default assigns underexposed regions the large values.
ExposureMap exposure_map(const ImageTensor& y0, double amplitude = 0.25,
                         double base = 0.46, bool literal_sign = false);

// Pooled-luminance MSE against the exposure target. Pooling is non-overlapping
// average pooling with window pool_size; edge cells may be partial.
double exposure_loss(const ImageTensor& x0hat, const ExposureMap& target,
                     int pool_size = 16);
double exposure_loss_grad(const ImageTensor& x0hat, const ExposureMap& target,
                          int pool_size, ImageTensor& grad);

enum class PhaseMode { Raw, Phasor };

// Per-channel 2D DFT phase comparison. Raw is the plain MSE of principal
// phase values; Phasor compares unit phasors, mean |e^{iPx} - e^{iPy}|^2 =
// mean 2 - 2cos(dP), which is wrap-safe.
double phase_loss(const ImageTensor& x0hat, const ImageTensor& y0,
                  PhaseMode mode = PhaseMode::Phasor);
double phase_loss_grad(const ImageTensor& x0hat, const ImageTensor& y0,
                       PhaseMode mode, ImageTensor& grad);

// Reflectance MSE through a Retinex decomposer.
double color_loss(const ImageTensor& x0hat, const ImageTensor& y0,
                  const Decomposer& decomposer);
double color_loss_grad(const ImageTensor& x0hat, const ImageTensor& y0,
                       const Decomposer& decomposer, ImageTensor& grad);

// Variant against a precomputed reference reflectance; grad may be null.
double color_loss_precomputed(const ImageTensor& x0hat,
                              const ImageTensor& ref_reflectance,
                              const Decomposer& decomposer, ImageTensor* grad);

struct AttributeToggles {
    bool exposure = true;
    bool structure = true;
    bool color = true;

    bool any() const { return exposure || structure || color; }
};

struct AttributeWeights {
    double exposure = 1000.0;
    double structure = 10.0;
    double color = 0.03;
};

// Precomputed per-channel phases of a reference image.
struct PhaseAnalysis {
    std::vector<Spectrum> spectra;          // per channel
    std::vector<std::vector<double>> phase;  // per channel, h*w
};
PhaseAnalysis analyze_phase(const ImageTensor& img);

// Variant against a pre-analyzed reference; grad may be null.
double phase_loss_precomputed(const ImageTensor& x0hat, const PhaseAnalysis& ref,
                              PhaseMode mode, ImageTensor* grad);

// Everything the guided sampler needs per run: the target map and reference
// derivations are computed once from y0.
struct AttributeContext {
    ExposureMap exposure_target;
    ImageTensor reference;  // y0, unit range
    DecomposerHandle decomposer;
    AttributeWeights lambdas;
    AttributeToggles toggles;
    int pool_size = 16;
    PhaseMode phase_mode = PhaseMode::Phasor;

    // Cached reference terms (filled by make_attribute_context).
    std::optional<PhaseAnalysis> reference_phase;
    std::optional<ImageTensor> reference_reflectance;
};

AttributeContext make_attribute_context(const ImageTensor& y0,
                                        DecomposerHandle decomposer,
                                        const AttributeWeights& lambdas,
                                        const AttributeToggles& toggles,
                                        int pool_size = 16,
                                        PhaseMode phase_mode = PhaseMode::Phasor,
                                        double exposure_amplitude = 0.25,
                                        double exposure_base = 0.46,
                                        bool exposure_literal_sign = false);

struct AttributeLossReport {
    double exposure = 0.0;   // L1
    double structure = 0.0;  // L2
    double color = 0.0;      // L3
    AttributeWeights lambdas;
    double total = 0.0;
    ImageTensor grad;  // d total / d x0hat, unit domain
    bool guidance_noop = false;
};

// Weighted aggregate and its gradient w.r.t. x0hat (unit range). Toggled-off
// attributes contribute exactly zero to both.
AttributeLossReport total_loss_and_grad(const ImageTensor& x0hat,
                                        const AttributeContext& ctx);

}  // namespace relight
