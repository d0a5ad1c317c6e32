#pragma once

#include <filesystem>
#include <optional>

#include "relight/denoiser/conv_model.hpp"
#include "relight/diffusion/schedule.hpp"

namespace relight {

// Adapter for externally produced weights in the safetensors layout.
//
// Expected contents:
//   __metadata__: "height", "width", "channels", "hidden", "conv_layers",
//                 "kernel", "time_embed", "coord_channels" (all decimal
//                 strings); optional "schedule_steps".
//   tensors:      "conv{i}.weight" [out,in,k,k] and "conv{i}.bias" [out]
//                 for i = 0..conv_layers-1, dtype F32 or F64.
//
// When the caller passes an expected resolution/channel count, a mismatch
// raises CompatibilityError reporting both sides.
DenoiserHandle load_external(const std::filesystem::path& path,
                             const NoiseSchedule& schedule,
                             std::optional<int> expected_height = std::nullopt,
                             std::optional<int> expected_width = std::nullopt,
                             std::optional<int> expected_channels = std::nullopt);

}  // namespace relight
