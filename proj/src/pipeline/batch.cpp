#include "relight/pipeline/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "relight/denoiser/analytic.hpp"
#include "relight/denoiser/conv_model.hpp"
#include "relight/denoiser/external.hpp"
#include "relight/pipeline/image_io.hpp"
#include "relight/retinex/network.hpp"

namespace relight {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> list_inputs(const fs::path& input) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && is_image_file(e.path()))
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        throw IoError("input path does not exist: " + input.string());
    }
    if (files.empty()) throw DataError("no input images in " + input.string());
    return files;
}

std::map<std::string, fs::path> index_by_stem(const fs::path& dir) {
    std::map<std::string, fs::path> idx;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image_file(e.path()))
            idx[e.path().stem().string()] = e.path();
    return idx;
}

bool is_native_container(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    char magic[8] = {0};
    is.read(magic, 8);
    return is && std::memcmp(magic, "RLNET1\0\0", 8) == 0;
}

std::string phase_mode_name(PhaseMode m) {
    return m == PhaseMode::Phasor ? "phasor" : "raw";
}

PhaseMode phase_mode_from(const std::string& s) {
    if (s == "phasor") return PhaseMode::Phasor;
    if (s == "raw") return PhaseMode::Raw;
    throw ConfigError("unknown phase mode: " + s);
}

json spec_to_json(const RunSpec& s) {
    json j;
    j["schedule"] = {{"steps", s.schedule.steps},
                     {"beta_kind", s.schedule.beta.kind == BetaSpec::Kind::Linear
                                       ? "linear"
                                       : "constant"},
                     {"beta_start", s.schedule.beta.beta_start},
                     {"beta_end", s.schedule.beta.beta_end}};
    j["denoiser"] = {{"kind", s.denoiser.kind == DenoiserSpec::Kind::Checkpoint
                                  ? "checkpoint"
                                  : "analytic"},
                     {"prior_variance", s.denoiser.prior_variance},
                     {"checkpoint", s.denoiser.checkpoint}};
    j["decomposer"] = {{"kind", s.decomposer.kind == DecomposerSpec::Kind::Network
                                    ? "network"
                                    : "classical"},
                       {"blur_sigma", s.decomposer.blur_sigma},
                       {"floor", s.decomposer.floor},
                       {"checkpoint", s.decomposer.checkpoint}};
    const GuidanceConfig& g = s.guidance;
    j["guidance"] = {{"omega", g.omega},
                     {"scale", g.scale},
                     {"grad_steps", g.grad_steps},
                     {"lambda1", g.lambdas.exposure},
                     {"lambda2", g.lambdas.structure},
                     {"lambda3", g.lambdas.color},
                     {"exposure_on", g.toggles.exposure},
                     {"structure_on", g.toggles.structure},
                     {"color_on", g.toggles.color},
                     {"exposure_amplitude", g.exposure_amplitude},
                     {"exposure_base", g.exposure_base},
                     {"exposure_literal_sign", g.exposure_literal_sign},
                     {"pool_size", g.pool_size},
                     {"phase_mode", phase_mode_name(g.phase_mode)},
                     {"clamp_final", g.clamp_final},
                     {"static_scale", g.static_scale},
                     {"static_steps", g.static_steps},
                     {"max_grad_steps", g.max_grad_steps}};
    return j;
}

RunSpec spec_from_json(const json& j) {
    RunSpec s;
    const json& sch = j.at("schedule");
    s.schedule.steps = sch.at("steps").get<int>();
    s.schedule.beta =
        sch.at("beta_kind").get<std::string>() == "linear"
            ? BetaSpec::linear(sch.at("beta_start").get<double>(),
                               sch.at("beta_end").get<double>())
            : BetaSpec::constant(sch.at("beta_start").get<double>());

    const json& den = j.at("denoiser");
    s.denoiser.kind = den.at("kind").get<std::string>() == "checkpoint"
                          ? DenoiserSpec::Kind::Checkpoint
                          : DenoiserSpec::Kind::AnalyticInputPrior;
    s.denoiser.prior_variance = den.at("prior_variance").get<double>();
    s.denoiser.checkpoint = den.at("checkpoint").get<std::string>();

    const json& dec = j.at("decomposer");
    s.decomposer.kind = dec.at("kind").get<std::string>() == "network"
                            ? DecomposerSpec::Kind::Network
                            : DecomposerSpec::Kind::Classical;
    s.decomposer.blur_sigma = dec.at("blur_sigma").get<double>();
    s.decomposer.floor = dec.at("floor").get<double>();
    s.decomposer.checkpoint = dec.at("checkpoint").get<std::string>();

    const json& g = j.at("guidance");
    GuidanceConfig& c = s.guidance;
    c.omega = g.at("omega").get<int>();
    c.scale = g.at("scale").get<double>();
    c.grad_steps = g.at("grad_steps").get<int>();
    c.lambdas.exposure = g.at("lambda1").get<double>();
    c.lambdas.structure = g.at("lambda2").get<double>();
    c.lambdas.color = g.at("lambda3").get<double>();
    c.toggles.exposure = g.at("exposure_on").get<bool>();
    c.toggles.structure = g.at("structure_on").get<bool>();
    c.toggles.color = g.at("color_on").get<bool>();
    c.exposure_amplitude = g.at("exposure_amplitude").get<double>();
    c.exposure_base = g.at("exposure_base").get<double>();
    c.exposure_literal_sign = g.at("exposure_literal_sign").get<bool>();
    c.pool_size = g.at("pool_size").get<int>();
    c.phase_mode = phase_mode_from(g.at("phase_mode").get<std::string>());
    c.clamp_final = g.at("clamp_final").get<bool>();
    c.static_scale = g.at("static_scale").get<bool>();
    c.static_steps = g.at("static_steps").get<bool>();
    c.max_grad_steps = g.at("max_grad_steps").get<int>();
    return s;
}

json metrics_to_json(const MetricReport& m) {
    json j;
    j["id"] = m.id;
    if (std::isinf(m.psnr))
        j["psnr_db"] = "inf";
    else
        j["psnr_db"] = m.psnr;
    j["ssim"] = m.ssim;
    j["mean_exposure"] = m.mean_exposure;
    return j;
}

MetricReport metrics_from_json(const json& j) {
    MetricReport m;
    m.id = j.at("id").get<std::string>();
    if (j.at("psnr_db").is_string())
        m.psnr = std::numeric_limits<double>::infinity();
    else
        m.psnr = j.at("psnr_db").get<double>();
    m.ssim = j.at("ssim").get<double>();
    m.mean_exposure = j.at("mean_exposure").get<double>();
    return m;
}

struct EnhanceOutcome {
    ImageTensor output;
    SamplerTrace trace;
    std::string resize_policy;
};

EnhanceOutcome enhance_one(const ImageTensor& loaded, const RunSpec& spec,
                           uint64_t seed, const NoiseSchedule& schedule,
                           const DenoiserHandle& shared_denoiser,
                           const DecomposerHandle& decomposer) {
    EnhanceOutcome out;
    ImageTensor img = to_rgb(loaded);
    out.resize_policy = "native";

    DenoiserHandle denoiser = shared_denoiser;
    if (denoiser) {
        const DenoiserInfo& info = denoiser->info();
        if (img.height() != info.height || img.width() != info.width) {
            img = fit_to(img, info.height, info.width);
            out.resize_policy = "fit";
        }
    } else {
        denoiser = std::make_shared<AnalyticGaussianDenoiser>(
            img.to_symmetric(), spec.denoiser.prior_variance, schedule);
    }

    Rng rng(seed);
    EnhanceResult res =
        enhance(img, *denoiser, decomposer, spec.guidance, schedule, rng);
    out.output = std::move(res.output);
    out.trace = std::move(res.trace);
    return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write manifest: " + path.string());
    for (const auto& r : records) os << record_to_json(r).dump() << "\n";
}

void write_summary_csv(const fs::path& path,
                       const std::vector<ManifestRecord>& records) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write summary: " + path.string());
    os << "image,psnr_db,ssim,mean_exposure,wall_seconds\n";
    double psnr_sum = 0.0, ssim_sum = 0.0, exp_sum = 0.0, wall_sum = 0.0;
    int with_metrics = 0;
    for (const auto& r : records) {
        os << fs::path(r.input).filename().string() << ",";
        if (r.metrics) {
            ++with_metrics;
            psnr_sum += r.metrics->psnr;
            ssim_sum += r.metrics->ssim;
            exp_sum += r.metrics->mean_exposure;
            if (std::isinf(r.metrics->psnr))
                os << "inf";
            else
                os << r.metrics->psnr;
            os << "," << r.metrics->ssim << "," << r.metrics->mean_exposure;
        } else {
            os << ",,";
        }
        os << "," << r.wall_seconds << "\n";
        wall_sum += r.wall_seconds;
    }
    if (with_metrics > 0) {
        os << "mean,";
        if (std::isinf(psnr_sum))
            os << "inf";
        else
            os << psnr_sum / with_metrics;
        os << "," << ssim_sum / with_metrics << "," << exp_sum / with_metrics << ","
           << wall_sum / records.size() << "\n";
    }
}

template <typename Fn>
void parallel_for(size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(count));
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

json record_to_json(const ManifestRecord& r) {
    json j;
    j["input"] = r.input;
    j["output"] = r.output;
    j["seed"] = r.seed;
    j["resize_policy"] = r.resize_policy;
    j["spec"] = spec_to_json(r.spec);
    if (r.metrics) j["metrics"] = metrics_to_json(*r.metrics);
    auto& steps = j["trace"] = json::array();
    for (const auto& s : r.trace)
        steps.push_back({s.t, s.exposure, s.structure, s.color, s.total, s.s_hat,
                         s.n_hat, s.grad_norm, s.step_delta});
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

ManifestRecord record_from_json(const json& j) {
    ManifestRecord r;
    r.input = j.at("input").get<std::string>();
    r.output = j.at("output").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.resize_policy = j.at("resize_policy").get<std::string>();
    r.spec = spec_from_json(j.at("spec"));
    if (j.contains("metrics")) r.metrics = metrics_from_json(j.at("metrics"));
    for (const auto& s : j.at("trace")) {
        StepRecord rec;
        rec.t = s.at(0).get<int>();
        rec.exposure = s.at(1).get<double>();
        rec.structure = s.at(2).get<double>();
        rec.color = s.at(3).get<double>();
        rec.total = s.at(4).get<double>();
        rec.s_hat = s.at(5).get<double>();
        rec.n_hat = s.at(6).get<long long>();
        rec.grad_norm = s.at(7).get<double>();
        rec.step_delta = s.at(8).get<double>();
        r.trace.push_back(rec);
    }
    r.wall_seconds = j.at("wall_seconds").get<double>();
    return r;
}

DenoiserHandle build_denoiser(const DenoiserSpec& spec, const NoiseSchedule& schedule,
                              const ImageTensor& input_symmetric) {
    if (spec.kind == DenoiserSpec::Kind::AnalyticInputPrior)
        return std::make_shared<AnalyticGaussianDenoiser>(
            input_symmetric, spec.prior_variance, schedule);
    const fs::path path = spec.checkpoint;
    if (is_native_container(path)) return ConvDenoiser::load(path);
    return load_external(path, schedule);
}

DecomposerHandle build_decomposer(const DecomposerSpec& spec) {
    if (spec.kind == DecomposerSpec::Kind::Classical)
        return std::make_shared<ClassicalDecomposer>(spec.blur_sigma, spec.floor);
    return load_decomposer_network(spec.checkpoint);
}

std::vector<ManifestRecord> run_batch(const BatchOptions& options) {
    const std::vector<fs::path> inputs = list_inputs(options.input);

    std::map<std::string, fs::path> refs;
    if (options.reference_dir) {
        refs = index_by_stem(*options.reference_dir);
        std::string missing;
        for (const auto& in : inputs)
            if (!refs.count(in.stem().string()))
                missing += (missing.empty() ? "" : ", ") + in.stem().string();
        if (!missing.empty())
            throw PairingError("inputs without a paired reference: " + missing);
    }

    fs::create_directories(options.output_dir);
    const NoiseSchedule schedule = options.spec.schedule.build();

    DenoiserHandle shared_denoiser;  // null for the per-image analytic prior
    if (options.spec.denoiser.kind == DenoiserSpec::Kind::Checkpoint) {
        const fs::path path = options.spec.denoiser.checkpoint;
        shared_denoiser = is_native_container(path)
                              ? DenoiserHandle(ConvDenoiser::load(path))
                              : load_external(path, schedule);
    }
    const DecomposerHandle decomposer = build_decomposer(options.spec.decomposer);

    std::vector<ManifestRecord> records(inputs.size());
    parallel_for(inputs.size(), options.jobs, [&](size_t i) {
        const fs::path& in = inputs[i];
        const auto start = std::chrono::steady_clock::now();

        const uint64_t seed = options.seed ^ fnv1a64(in.stem().string());
        const ImageTensor loaded = load_image(in);
        EnhanceOutcome out = enhance_one(loaded, options.spec, seed, schedule,
                                         shared_denoiser, decomposer);

        const fs::path out_path = options.output_dir / (in.stem().string() + ".png");
        save_image(out.output, out_path);

        ManifestRecord rec;
        rec.input = in.string();
        rec.output = out_path.string();
        rec.spec = options.spec;
        rec.seed = seed;
        rec.resize_policy = out.resize_policy;
        rec.trace = out.trace.steps;
        if (options.reference_dir) {
            ImageTensor ref = to_rgb(load_image(refs.at(in.stem().string())));
            if (!ref.same_shape(out.output))
                ref = fit_to(ref, out.output.height(), out.output.width());
            MetricReport m;
            m.id = in.stem().string();
            m.psnr = psnr(out.output, ref);
            m.ssim = ssim(out.output, ref);
            m.mean_exposure = mean_exposure(out.output);
            rec.metrics = m;
        }
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        records[i] = std::move(rec);
    });

    const fs::path manifest =
        options.manifest_path.value_or(options.output_dir / "manifest.jsonl");
    write_manifest(manifest, records);
    if (options.summary_csv) write_summary_csv(*options.summary_csv, records);
    return records;
}

std::vector<ManifestRecord> replay_manifest(const fs::path& manifest_path,
                                            const fs::path& output_dir, int jobs) {
    std::ifstream is(manifest_path);
    if (!is) throw IoError("cannot read manifest: " + manifest_path.string());

    std::vector<ManifestRecord> records;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError("bad manifest line: " + std::string(e.what()));
        }
    }
    if (records.empty()) throw DataError("manifest has no records");

    fs::create_directories(output_dir);
    std::vector<ManifestRecord> replayed(records.size());
    parallel_for(records.size(), jobs, [&](size_t i) {
        const ManifestRecord& r = records[i];
        const NoiseSchedule schedule = r.spec.schedule.build();

        DenoiserHandle shared;
        if (r.spec.denoiser.kind == DenoiserSpec::Kind::Checkpoint) {
            const fs::path path = r.spec.denoiser.checkpoint;
            shared = is_native_container(path) ? DenoiserHandle(ConvDenoiser::load(path))
                                               : load_external(path, schedule);
        }
        const DecomposerHandle decomposer = build_decomposer(r.spec.decomposer);

        const ImageTensor loaded = load_image(r.input);
        EnhanceOutcome out =
            enhance_one(loaded, r.spec, r.seed, schedule, shared, decomposer);

        const fs::path out_path =
            output_dir / (fs::path(r.input).stem().string() + ".png");
        save_image(out.output, out_path);

        ManifestRecord rec = r;
        rec.output = out_path.string();
        rec.trace = out.trace.steps;
        replayed[i] = std::move(rec);
    });
    write_manifest(output_dir / "manifest.jsonl", replayed);
    return replayed;
}

}  // namespace relight
