#pragma once

#include <filesystem>

#include "relight/core/image.hpp"

namespace relight {

// Loads an 8-bit PNG or JPEG (sniffed by magic bytes) into [0,1].
// Grayscale files load as 1-channel tensors; palette images expand to RGB;
// alpha is stripped. 16-bit files raise FormatError.
ImageTensor load_image(const std::filesystem::path& path);

// Saves a unit-range image as an 8-bit PNG, quantizing with round
// half-to-even.
void save_image(const ImageTensor& img, const std::filesystem::path& path);

// Bilinear resample to the exact target size.
ImageTensor resize_bilinear(const ImageTensor& img, int height, int width);

// Scale to cover the target, then center-crop ("fit" policy for
// fixed-resolution denoisers).
ImageTensor fit_to(const ImageTensor& img, int height, int width);

// 1-channel -> RGB replication; RGB passes through.
ImageTensor to_rgb(const ImageTensor& img);

}  // namespace relight
