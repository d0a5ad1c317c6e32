#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <png.h>

#include "relight/denoiser/toy.hpp"
#include "relight/pipeline/batch.hpp"
#include "relight/pipeline/image_io.hpp"
#include "test_util.hpp"

using namespace relight;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "relight_pipeline_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_16bit_png(const fs::path& path, int h, int w) {
    FILE* f = std::fopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<size_t>(w) * 2, 0x7F);
    for (int y = 0; y < h; ++y) png_write_row(png, row.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

RunSpec fast_spec() {
    RunSpec spec;
    spec.schedule.steps = 20;
    spec.schedule.beta = BetaSpec::constant(0.06);
    spec.denoiser.kind = DenoiserSpec::Kind::AnalyticInputPrior;
    spec.denoiser.prior_variance = 2.0;
    spec.decomposer.kind = DecomposerSpec::Kind::Classical;
    spec.decomposer.blur_sigma = 2.0;
    spec.guidance.omega = 3;
    spec.guidance.toggles = {true, false, false};
    spec.guidance.pool_size = 4;
    return spec;
}

void write_inputs(const fs::path& dir, int count, int size, uint64_t seed0) {
    for (int i = 0; i < count; ++i)
        save_image(testutil::dark_image(seed0 + i, size),
                   dir / ("img" + std::to_string(i) + ".png"));
}

}  // namespace

TEST_CASE("png save/load round-trip stays within the quantization bound") {
    const fs::path dir = temp_dir("roundtrip");
    const ImageTensor img = testutil::random_image(3, 9, 13, 3);
    save_image(img, dir / "x.png");
    const ImageTensor back = load_image(dir / "x.png");
    REQUIRE(back.same_shape(img));
    double worst = 0.0;
    for (size_t i = 0; i < img.size(); ++i)
        worst = std::max(worst, std::abs(back[i] - img[i]));
    CHECK(worst <= 1.0 / 510.0 + 1e-12);
}

TEST_CASE("grayscale png loads as one channel") {
    const fs::path dir = temp_dir("gray");
    ImageTensor gray(6, 5, 1, Range::Unit, 0.25);
    save_image(gray, dir / "g.png");
    const ImageTensor back = load_image(dir / "g.png");
    CHECK(back.channels() == 1);
    CHECK(back.height() == 6);
    CHECK(back.width() == 5);
}

TEST_CASE("16-bit png is a format error") {
    const fs::path dir = temp_dir("deep");
    write_16bit_png(dir / "deep.png", 4, 4);
    CHECK_THROWS_AS(load_image(dir / "deep.png"), FormatError);
}

TEST_CASE("unreadable or non-image files raise") {
    const fs::path dir = temp_dir("bad");
    CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
    std::ofstream(dir / "text.png") << "this is not a png";
    CHECK_THROWS_AS(load_image(dir / "text.png"), FormatError);
}

TEST_CASE("resize and rgb helpers") {
    const ImageTensor img = testutil::random_image(5, 8, 12, 3);
    const ImageTensor fitted = fit_to(img, 6, 6);
    CHECK(fitted.height() == 6);
    CHECK(fitted.width() == 6);

    ImageTensor gray(4, 4, 1, Range::Unit, 0.5);
    const ImageTensor rgb = to_rgb(gray);
    CHECK(rgb.channels() == 3);
    CHECK(rgb.at(2, 2, 2) == 0.5);
}

TEST_CASE("manifest records round-trip through json") {
    ManifestRecord r;
    r.input = "/tmp/in.png";
    r.output = "/tmp/out.png";
    r.spec = fast_spec();
    r.spec.guidance.phase_mode = PhaseMode::Raw;
    r.seed = 0xDEADBEEFCAFEull;
    r.resize_policy = "fit";
    MetricReport m;
    m.id = "in";
    m.psnr = 21.5;
    m.ssim = 0.83;
    m.mean_exposure = 0.4;
    r.metrics = m;
    StepRecord s;
    s.t = 3;
    s.total = 1.25;
    s.s_hat = 2.5;
    s.n_hat = 4;
    r.trace.push_back(s);
    r.wall_seconds = 0.125;

    const ManifestRecord back = record_from_json(record_to_json(r));
    CHECK(back.input == r.input);
    CHECK(back.seed == r.seed);
    CHECK(back.resize_policy == "fit");
    CHECK(back.spec.schedule.steps == 20);
    CHECK(back.spec.guidance.phase_mode == PhaseMode::Raw);
    CHECK(back.spec.guidance.toggles.structure == false);
    CHECK(back.metrics->psnr == doctest::Approx(21.5));
    REQUIRE(back.trace.size() == 1);
    CHECK(back.trace[0].n_hat == 4);
    CHECK(back.wall_seconds == doctest::Approx(0.125));
}

TEST_CASE("run_batch without references") {
    const fs::path in = temp_dir("batch_in");
    const fs::path out = temp_dir("batch_out");
    write_inputs(in, 3, 12, 100);

    BatchOptions opts;
    opts.input = in;
    opts.output_dir = out;
    opts.spec = fast_spec();
    opts.seed = 7;

    const auto records = run_batch(opts);
    REQUIRE(records.size() == 3);
    for (const auto& r : records) {
        CHECK(!r.metrics.has_value());
        CHECK(fs::exists(r.output));
        CHECK(r.trace.size() == 3);
        CHECK(r.wall_seconds > 0.0);
    }
    CHECK(fs::exists(out / "manifest.jsonl"));

    // Seeds derive from stems, not batch order.
    CHECK(records[0].seed == (7ull ^ fnv1a64("img0")));
    CHECK(records[2].seed == (7ull ^ fnv1a64("img2")));
}

TEST_CASE("run_batch with references computes metrics and the csv mean") {
    const fs::path in = temp_dir("ref_in");
    const fs::path ref = temp_dir("ref_ref");
    const fs::path out = temp_dir("ref_out");
    write_inputs(in, 3, 16, 200);
    for (int i = 0; i < 3; ++i)
        save_image(testutil::random_image(300 + i, 16, 16, 3, 0.3, 0.9),
                   ref / ("img" + std::to_string(i) + ".png"));

    BatchOptions opts;
    opts.input = in;
    opts.output_dir = out;
    opts.reference_dir = ref;
    opts.spec = fast_spec();
    opts.summary_csv = out / "summary.csv";

    const auto records = run_batch(opts);
    REQUIRE(records.size() == 3);
    double mean_psnr = 0.0;
    for (const auto& r : records) {
        REQUIRE(r.metrics.has_value());
        mean_psnr += r.metrics->psnr;
    }
    mean_psnr /= 3.0;

    std::ifstream csv(out / "summary.csv");
    std::string line, mean_line;
    std::getline(csv, line);
    CHECK(line == "image,psnr_db,ssim,mean_exposure,wall_seconds");
    while (std::getline(csv, line))
        if (line.rfind("mean,", 0) == 0) mean_line = line;
    REQUIRE(!mean_line.empty());
    const double csv_mean = std::stod(mean_line.substr(5));
    CHECK(csv_mean == doctest::Approx(mean_psnr).epsilon(1e-4));
}

TEST_CASE("batch error paths") {
    const fs::path empty = temp_dir("empty_in");
    BatchOptions opts;
    opts.input = empty;
    opts.output_dir = temp_dir("empty_out");
    opts.spec = fast_spec();
    CHECK_THROWS_AS(run_batch(opts), DataError);

    const fs::path in = temp_dir("pair_in");
    write_inputs(in, 2, 12, 400);
    const fs::path ref = temp_dir("pair_ref");
    save_image(testutil::random_image(401, 12, 12, 3), ref / "img0.png");
    opts.input = in;
    opts.reference_dir = ref;
    try {
        run_batch(opts);
        FAIL("expected PairingError");
    } catch (const PairingError& e) {
        CHECK(std::string(e.what()).find("img1") != std::string::npos);
    }
}

TEST_CASE("parallel batches match the single-worker outputs") {
    const fs::path in = temp_dir("par_in");
    write_inputs(in, 4, 12, 500);

    BatchOptions a;
    a.input = in;
    a.output_dir = temp_dir("par_out1");
    a.spec = fast_spec();
    a.jobs = 1;
    BatchOptions b = a;
    b.output_dir = temp_dir("par_out4");
    b.jobs = 4;

    const auto ra = run_batch(a);
    const auto rb = run_batch(b);
    REQUIRE(ra.size() == rb.size());
    for (size_t i = 0; i < ra.size(); ++i)
        CHECK(file_bytes(ra[i].output) == file_bytes(rb[i].output));
}

TEST_CASE("checkpoint denoisers drive the batch with the fit policy") {
    const fs::path in = temp_dir("ckpt_in");
    write_inputs(in, 2, 12, 700);

    // Train a small toy model at 16x16 and push 12x12 inputs through it.
    const NoiseSchedule sched = NoiseSchedule::make(20, BetaSpec::constant(0.06));
    ToyTrainConfig tcfg;
    tcfg.steps = 30;
    tcfg.hidden = 8;
    tcfg.conv_layers = 2;
    const auto model =
        train_toy_denoiser({testutil::random_image(71, 16, 16, 3)}, sched, tcfg);
    const fs::path ckpt = temp_dir("ckpt_model") / "toy.rlnet";
    model->save(ckpt);

    BatchOptions opts;
    opts.input = in;
    opts.output_dir = temp_dir("ckpt_out");
    opts.spec = fast_spec();
    opts.spec.denoiser.kind = DenoiserSpec::Kind::Checkpoint;
    opts.spec.denoiser.checkpoint = ckpt.string();

    const auto records = run_batch(opts);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
        CHECK(r.resize_policy == "fit");
        const ImageTensor out = load_image(r.output);
        CHECK(out.height() == 16);
        CHECK(out.width() == 16);
    }

    // And the records replay exactly like any other spec.
    const auto replayed = replay_manifest(opts.output_dir / "manifest.jsonl",
                                          temp_dir("ckpt_replay"));
    for (size_t i = 0; i < records.size(); ++i)
        CHECK(file_bytes(records[i].output) == file_bytes(replayed[i].output));
}

TEST_CASE("replaying a manifest reproduces outputs byte-for-byte") {
    const fs::path in = temp_dir("replay_in");
    write_inputs(in, 3, 12, 600);

    BatchOptions opts;
    opts.input = in;
    opts.output_dir = temp_dir("replay_out");
    opts.spec = fast_spec();
    opts.seed = 99;

    const auto first = run_batch(opts);
    const auto replayed =
        replay_manifest(opts.output_dir / "manifest.jsonl", temp_dir("replay_out2"));
    REQUIRE(replayed.size() == first.size());
    for (size_t i = 0; i < first.size(); ++i) {
        CHECK(file_bytes(first[i].output) == file_bytes(replayed[i].output));
        CHECK(first[i].seed == replayed[i].seed);
    }
}
