#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "relight/metrics/metrics.hpp"
#include "relight/retinex/decomposer.hpp"
#include "relight/sampler/sampler.hpp"

namespace relight {

struct ScheduleSpec {
    int steps = 1000;
    BetaSpec beta = BetaSpec::linear(1e-4, 0.02);

    NoiseSchedule build() const { return NoiseSchedule::make(steps, beta); }
};

struct DenoiserSpec {
    enum class Kind { AnalyticInputPrior, Checkpoint };

    Kind kind = Kind::AnalyticInputPrior;
    double prior_variance = 4.0;  // analytic prior around the input image
    std::string checkpoint;      // native container or safetensors, sniffed
};

struct DecomposerSpec {
    enum class Kind { Classical, Network };

    Kind kind = Kind::Classical;
    double blur_sigma = 5.0;
    double floor = 1e-3;
    std::string checkpoint;
};

// Everything needed to reproduce one enhancement run bit-exactly (plus the
// per-image seed recorded in the manifest).
struct RunSpec {
    ScheduleSpec schedule;
    DenoiserSpec denoiser;
    DecomposerSpec decomposer;
    GuidanceConfig guidance;
};

struct ManifestRecord {
    std::string input;
    std::string output;
    RunSpec spec;
    uint64_t seed = 0;  // derived per-image seed actually used
    std::string resize_policy = "native";
    std::optional<MetricReport> metrics;
    std::vector<StepRecord> trace;
    double wall_seconds = 0.0;
};

nlohmann::json record_to_json(const ManifestRecord& r);
ManifestRecord record_from_json(const nlohmann::json& j);

struct BatchOptions {
    std::filesystem::path input;  // directory or single image
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> reference_dir;
    RunSpec spec;
    uint64_t seed = 0;
    int jobs = 1;
    std::optional<std::filesystem::path> manifest_path;  // default: output/manifest.jsonl
    std::optional<std::filesystem::path> summary_csv;
};

// Enhances every image in the input, writes PNGs, a JSONL manifest (one
// record per image, input order) and an optional CSV summary. Per-image seeds
// are seed XOR fnv1a64(stem), so results do not depend on batch order or
// worker count.
std::vector<ManifestRecord> run_batch(const BatchOptions& options);

// Re-runs every record of a manifest from its own config snapshot and seed.
std::vector<ManifestRecord> replay_manifest(const std::filesystem::path& manifest_path,
                                            const std::filesystem::path& output_dir,
                                            int jobs = 1);

// Builders shared with the CLI.
DenoiserHandle build_denoiser(const DenoiserSpec& spec, const NoiseSchedule& schedule,
                              const ImageTensor& input_symmetric);
DecomposerHandle build_decomposer(const DecomposerSpec& spec);

}  // namespace relight
