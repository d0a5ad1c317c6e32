// relight: low-light image enhancement by attribute-guided diffusion sampling.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

#include "relight/denoiser/toy.hpp"
#include "relight/pipeline/batch.hpp"
#include "relight/pipeline/image_io.hpp"

using namespace relight;

namespace {

struct EnhanceArgs {
    std::string input, output, ref, manifest, summary;
    std::string model, rnet;
    std::string denoiser_kind = "analytic";
    std::string decomposer_kind = "classical";
    std::string phase_mode = "phasor";
    RunSpec spec;
    bool no_exposure = false, no_structure = false, no_color = false;
    bool literal_exposure_sign = false;
    uint64_t seed = 0;
    int jobs = 1;
};

void add_enhance_command(CLI::App& app, EnhanceArgs& a) {
    CLI::App* cmd = app.add_subcommand(
        "enhance", "Enhance a low-light image or a directory of images");
    cmd->set_config("--config", "", "Key-value config file; flags override it");

    cmd->add_option("--input", a.input, "Input image or directory")->required();
    cmd->add_option("--output", a.output, "Output directory")->required();
    cmd->add_option("--ref", a.ref, "Reference directory paired by filename stem");
    cmd->add_option("--manifest", a.manifest,
                    "Manifest path (default <output>/manifest.jsonl)");
    cmd->add_option("--summary", a.summary, "Summary CSV path");
    cmd->add_option("--jobs", a.jobs, "Parallel worker count")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", a.seed, "Base seed; per-image seeds derive from it");

    GuidanceConfig& g = a.spec.guidance;
    cmd->add_option("--omega", g.omega, "Noising / guided reverse steps");
    cmd->add_option("--scale", g.scale, "Base guidance scale s");
    cmd->add_option("--grad-steps", g.grad_steps, "Base gradient steps N");
    cmd->add_option("--lambda1", g.lambdas.exposure, "Exposure weight");
    cmd->add_option("--lambda2", g.lambdas.structure, "Structure weight");
    cmd->add_option("--lambda3", g.lambdas.color, "Colour weight");
    cmd->add_option("--exposure-base", g.exposure_base, "Exposure map base B");
    cmd->add_option("--exposure-amp", g.exposure_amplitude, "Exposure map amplitude A");
    cmd->add_option("--pool-size", g.pool_size, "Exposure pooling window");
    cmd->add_option("--phase-mode", a.phase_mode, "Phase comparison: phasor|raw")
        ->check(CLI::IsMember({"phasor", "raw"}));
    cmd->add_flag("--literal-exposure-sign", a.literal_exposure_sign,
                  "Use the non-negated exposure map orientation");
    cmd->add_flag("--no-exposure", a.no_exposure, "Disable exposure guidance");
    cmd->add_flag("--no-structure", a.no_structure, "Disable structure guidance");
    cmd->add_flag("--no-color", a.no_color, "Disable colour guidance");
    cmd->add_flag("--static-scale", g.static_scale,
                  "Constant guidance scale instead of the dynamic one");
    cmd->add_flag("--static-steps", g.static_steps,
                  "Constant gradient steps instead of the dynamic count");
    cmd->add_option("--max-grad-steps", g.max_grad_steps,
                    "Safety cap on the dynamic step count");

    cmd->add_option("--denoiser", a.denoiser_kind,
                    "Denoiser provider: analytic|checkpoint")
        ->check(CLI::IsMember({"analytic", "checkpoint"}));
    cmd->add_option("--model", a.model,
                    "Denoiser checkpoint (native container or safetensors); "
                    "implies --denoiser checkpoint");
    cmd->add_option("--prior-variance", a.spec.denoiser.prior_variance,
                    "Variance of the analytic prior around the input");
    cmd->add_option("--decomposer", a.decomposer_kind,
                    "Retinex provider: classical|network")
        ->check(CLI::IsMember({"classical", "network"}));
    cmd->add_option("--rnet", a.rnet, "Decomposition network checkpoint");
    cmd->add_option("--blur-sigma", a.spec.decomposer.blur_sigma,
                    "Classical decomposer blur sigma");
    cmd->add_option("--floor", a.spec.decomposer.floor,
                    "Classical decomposer illumination floor");

    ScheduleSpec& s = a.spec.schedule;
    cmd->add_option("--T", s.steps, "Diffusion step count");
    cmd->add_option("--beta-start", s.beta.beta_start, "First beta of the ramp");
    cmd->add_option("--beta-end", s.beta.beta_end, "Last beta of the ramp");

    cmd->callback([&a] {
        a.spec.guidance.toggles = {!a.no_exposure, !a.no_structure, !a.no_color};
        a.spec.guidance.exposure_literal_sign = a.literal_exposure_sign;
        a.spec.guidance.phase_mode =
            a.phase_mode == "raw" ? PhaseMode::Raw : PhaseMode::Phasor;
        a.spec.guidance.seed = a.seed;
        a.spec.schedule.beta.kind = a.spec.schedule.beta.beta_start ==
                                            a.spec.schedule.beta.beta_end
                                        ? BetaSpec::Kind::Constant
                                        : BetaSpec::Kind::Linear;
        if (!a.model.empty()) a.denoiser_kind = "checkpoint";
        a.spec.denoiser.kind = a.denoiser_kind == "checkpoint"
                                   ? DenoiserSpec::Kind::Checkpoint
                                   : DenoiserSpec::Kind::AnalyticInputPrior;
        a.spec.denoiser.checkpoint = a.model;
        a.spec.decomposer.kind = a.decomposer_kind == "network"
                                     ? DecomposerSpec::Kind::Network
                                     : DecomposerSpec::Kind::Classical;
        a.spec.decomposer.checkpoint = a.rnet;

        if (a.spec.denoiser.kind == DenoiserSpec::Kind::Checkpoint &&
            a.model.empty())
            throw CLI::ValidationError("--denoiser checkpoint requires --model");
        if (a.spec.decomposer.kind == DecomposerSpec::Kind::Network &&
            a.rnet.empty())
            throw CLI::ValidationError("--decomposer network requires --rnet");

        const GuidanceConfig& cfg = a.spec.guidance;
        if (cfg.toggles.any() && cfg.lambdas.exposure == 0.0 &&
            cfg.lambdas.structure == 0.0 && cfg.lambdas.color == 0.0)
            std::cerr << "warning: all attribute weights are zero; "
                         "guidance is a no-op\n";

        BatchOptions opts;
        opts.input = a.input;
        opts.output_dir = a.output;
        if (!a.ref.empty()) opts.reference_dir = a.ref;
        opts.spec = a.spec;
        opts.seed = a.seed;
        opts.jobs = a.jobs;
        if (!a.manifest.empty()) opts.manifest_path = a.manifest;
        if (!a.summary.empty()) opts.summary_csv = a.summary;

        const auto records = run_batch(opts);
        double mean_exp = 0.0;
        for (const auto& r : records) {
            std::cout << r.input << " -> " << r.output;
            if (r.metrics) {
                std::cout << "  psnr=";
                if (std::isinf(r.metrics->psnr))
                    std::cout << "inf";
                else
                    std::cout << r.metrics->psnr;
                std::cout << " ssim=" << r.metrics->ssim;
                mean_exp += r.metrics->mean_exposure;
            }
            std::cout << "  (" << r.wall_seconds << "s)\n";
        }
        std::cout << records.size() << " image(s) enhanced\n";
    });
}

void add_replay_command(CLI::App& app) {
    auto args = std::make_shared<std::pair<std::string, std::string>>();
    auto jobs = std::make_shared<int>(1);
    CLI::App* cmd = app.add_subcommand(
        "replay", "Re-run every record of a manifest bit-exactly");
    cmd->add_option("--manifest", args->first, "Manifest to replay")->required();
    cmd->add_option("--output", args->second, "Output directory")->required();
    cmd->add_option("--jobs", *jobs, "Parallel worker count")
        ->check(CLI::PositiveNumber);
    cmd->callback([args, jobs] {
        const auto records = replay_manifest(args->first, args->second, *jobs);
        std::cout << records.size() << " image(s) replayed\n";
    });
}

void add_train_command(CLI::App& app) {
    struct TrainArgs {
        std::string input, output;
        ToyTrainConfig cfg;
        int steps_T = 1000;
        double beta_start = 1e-4, beta_end = 0.02;
    };
    auto a = std::make_shared<TrainArgs>();
    CLI::App* cmd = app.add_subcommand(
        "train-toy", "Train a toy denoiser on a directory of same-size images");
    cmd->add_option("--input", a->input, "Training image directory")->required();
    cmd->add_option("--output", a->output, "Checkpoint path to write")->required();
    cmd->add_option("--steps", a->cfg.steps, "Training steps");
    cmd->add_option("--lr", a->cfg.lr, "Adam learning rate");
    cmd->add_option("--hidden", a->cfg.hidden, "Hidden channel width");
    cmd->add_option("--layers", a->cfg.conv_layers, "Convolution layer count");
    cmd->add_option("--seed", a->cfg.seed, "Training seed");
    cmd->add_option("--T", a->steps_T, "Diffusion step count");
    cmd->add_option("--beta-start", a->beta_start, "First beta of the ramp");
    cmd->add_option("--beta-end", a->beta_end, "Last beta of the ramp");
    cmd->callback([a] {
        const NoiseSchedule schedule = NoiseSchedule::make(
            a->steps_T, a->beta_start == a->beta_end
                            ? BetaSpec::constant(a->beta_start)
                            : BetaSpec::linear(a->beta_start, a->beta_end));
        std::vector<ImageTensor> dataset;
        for (const auto& e : std::filesystem::directory_iterator(a->input)) {
            if (!e.is_regular_file()) continue;
            const auto ext = e.path().extension().string();
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
                dataset.push_back(to_rgb(load_image(e.path())));
        }
        ToyTrainReport report;
        const auto model = train_toy_denoiser(dataset, schedule, a->cfg, &report);
        model->save(a->output);
        std::cout << "trained on " << dataset.size() << " image(s); windows:";
        for (double w : report.window_losses) std::cout << " " << w;
        std::cout << "\nsaved " << a->output << "\n";
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free low-light enhancement with attribute-guided "
                 "diffusion sampling"};
    app.require_subcommand(1);

    EnhanceArgs enhance_args;
    add_enhance_command(app, enhance_args);
    add_replay_command(app);
    add_train_command(app);

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
