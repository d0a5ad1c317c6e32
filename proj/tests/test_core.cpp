#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "relight/core/dft.hpp"
#include "relight/core/image.hpp"
#include "relight/core/rng.hpp"
#include "test_util.hpp"

using namespace relight;

TEST_CASE("image tensor validates shape") {
    CHECK_THROWS_AS(ImageTensor(0, 4, 3), ShapeError);
    CHECK_THROWS_AS(ImageTensor(4, 0, 1), ShapeError);
    CHECK_THROWS_AS(ImageTensor(4, 4, 2), ShapeError);
    CHECK_NOTHROW(ImageTensor(1, 1, 1));
}

TEST_CASE("range conversions round-trip") {
    ImageTensor img = testutil::random_image(3, 5, 7, 3);
    const ImageTensor back = img.to_symmetric().to_unit();
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(back[i] == doctest::Approx(img[i]).epsilon(1e-14));
}

TEST_CASE("clamp respects declared range") {
    ImageTensor img(2, 2, 1, Range::Symmetric);
    img[0] = -3.0;
    img[1] = 0.25;
    img[2] = 2.0;
    img[3] = -0.5;
    img.clamp_to_range();
    CHECK(img[0] == -1.0);
    CHECK(img[1] == 0.25);
    CHECK(img[2] == 1.0);
    CHECK(img[3] == -0.5);
}

TEST_CASE("rng is deterministic per seed") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const double va = a.gaussian(), vb = b.gaussian(), vc = c.gaussian();
        all_equal &= va == vb;
        any_diff |= va != vc;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("rng gaussian moments") {
    Rng rng(7);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.gaussian();
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("2x2 dft matches hand computation") {
    // [[a,b],[c,d]]: F00=a+b+c+d, F01=a-b+c-d, F10=a+b-c-d, F11=a-b-c+d.
    const std::vector<double> plane = {0.9, 0.2, 0.3, 0.5};
    const Spectrum s = dft2(plane, 2, 2);
    CHECK(s.at(0, 0).real() == doctest::Approx(1.9).epsilon(1e-12));
    CHECK(s.at(0, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.at(1, 0).real() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(s.at(1, 1).real() == doctest::Approx(0.9).epsilon(1e-12));
    for (const auto& v : s.v) CHECK(std::abs(v.imag()) < 1e-12);
}

TEST_CASE("dft inverse round-trips") {
    Rng rng(11);
    std::vector<double> plane(7 * 5);
    for (double& v : plane) v = rng.uniform();
    const std::vector<double> back = idft2_real(dft2(plane, 7, 5));
    for (size_t i = 0; i < plane.size(); ++i)
        CHECK(back[i] == doctest::Approx(plane[i]).epsilon(1e-11));
}

TEST_CASE("dft adjoint satisfies the inner-product identity") {
    Rng rng(13);
    const int h = 6, w = 4;
    std::vector<double> x(h * w);
    for (double& v : x) v = rng.uniform() - 0.5;
    Spectrum g;
    g.h = h;
    g.w = w;
    g.v.resize(x.size());
    for (auto& v : g.v) v = {rng.uniform() - 0.5, rng.uniform() - 0.5};

    const Spectrum fx = dft2(x, h, w);
    double lhs = 0.0;
    for (size_t i = 0; i < g.v.size(); ++i)
        lhs += g.v[i].real() * fx.v[i].real() + g.v[i].imag() * fx.v[i].imag();

    const std::vector<double> adj = dft2_adjoint(g);
    double rhs = 0.0;
    for (size_t i = 0; i < x.size(); ++i) rhs += adj[i] * x[i];

    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}
