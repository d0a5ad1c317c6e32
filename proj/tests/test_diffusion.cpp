#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relight/diffusion/process.hpp"
#include "relight/diffusion/schedule.hpp"
#include "test_util.hpp"

using namespace relight;

TEST_CASE("constant schedule alpha_bar examples") {
    const NoiseSchedule s = NoiseSchedule::make(3, BetaSpec::constant(0.01));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.99).epsilon(1e-14));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.9801).epsilon(1e-14));
    CHECK(s.alpha_bar(3) == doctest::Approx(0.970299).epsilon(1e-14));

    const NoiseSchedule one = NoiseSchedule::make(1, BetaSpec::constant(0.5));
    CHECK(one.alpha_bar(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("default schedule cumulative product matches the precomputed value") {
    const NoiseSchedule s = default_schedule();
    // Frozen from an independent cumulative-product script.
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9999).epsilon(1e-12));
    CHECK(s.alpha_bar(10) == doctest::Approx(0.9981052047858344).epsilon(1e-12));
    CHECK(s.alpha_bar(1000) == doctest::Approx(4.035829765375676e-05).epsilon(1e-9));
}

TEST_CASE("schedule invariants across beta specs") {
    const NoiseSchedule specs[] = {
        default_schedule(),
        NoiseSchedule::make(200, BetaSpec::constant(0.02)),
        NoiseSchedule::make(77, BetaSpec::linear(0.001, 0.1)),
        NoiseSchedule::make(1, BetaSpec::constant(0.3)),
    };
    for (const auto& s : specs) {
        for (int t = 1; t <= s.steps(); ++t) {
            CHECK(s.alpha_bar(t) > 0.0);
            CHECK(s.alpha_bar(t) < 1.0);
            CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
            CHECK(std::abs(s.alpha_bar(t) - s.alpha_bar(t - 1) * s.alpha(t)) <= 1e-12);
            CHECK(s.posterior_var(t) >= 0.0);
        }
    }
}

TEST_CASE("schedule rejects bad configuration") {
    CHECK_THROWS_AS(NoiseSchedule::make(0, BetaSpec::constant(0.1)), ConfigError);
    CHECK_THROWS_AS(NoiseSchedule::make(10, BetaSpec::constant(0.0)), ConfigError);
    CHECK_THROWS_AS(NoiseSchedule::make(10, BetaSpec::constant(1.0)), ConfigError);
    CHECK_THROWS_AS(NoiseSchedule::make(10, BetaSpec::linear(0.01, 1.5)), ConfigError);
}

TEST_CASE("forward_noise trivial cases") {
    const NoiseSchedule s = NoiseSchedule::make(50, BetaSpec::constant(0.05));
    const ImageTensor x0 = testutil::random_image(5, 4, 4, 3).to_symmetric();
    const ImageTensor zeros = ImageTensor::zeros_like(x0);

    const ImageTensor signal_only = forward_noise(x0, 20, s, zeros);
    const double sa = std::sqrt(s.alpha_bar(20));
    for (size_t i = 0; i < x0.size(); ++i)
        CHECK(signal_only[i] == doctest::Approx(sa * x0[i]).epsilon(1e-14));

    Rng rng(9);
    const ImageTensor noise = rng.gaussian_image(4, 4, 3, Range::Symmetric);
    const ImageTensor noise_only = forward_noise(zeros, 20, s, noise);
    const double sn = std::sqrt(1.0 - s.alpha_bar(20));
    for (size_t i = 0; i < noise.size(); ++i)
        CHECK(noise_only[i] == doctest::Approx(sn * noise[i]).epsilon(1e-14));

    CHECK_THROWS_AS(forward_noise(x0, 51, s, zeros), StepError);
    CHECK_THROWS_AS(forward_noise(x0, -1, s, zeros), StepError);
}

TEST_CASE("forward_noise Monte Carlo marginals") {
    const NoiseSchedule s = default_schedule();
    const int t = 400;
    const double ab = s.alpha_bar(t);
    const double x0_value = 0.37;
    ImageTensor x0(2, 2, 1, Range::Symmetric, x0_value);

    Rng rng(123);
    const int draws = 100000;
    double sum = 0.0, sq = 0.0;
    long count = 0;
    for (int i = 0; i < draws; ++i) {
        const ImageTensor noise = rng.gaussian_image(2, 2, 1, Range::Symmetric);
        const ImageTensor xt = forward_noise(x0, t, s, noise);
        for (size_t j = 0; j < xt.size(); ++j) {
            sum += xt[j];
            sq += xt[j] * xt[j];
            ++count;
        }
    }
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    const double target_mean = std::sqrt(ab) * x0_value;
    const double target_var = 1.0 - ab;
    const double se = std::sqrt(target_var / count);
    CHECK(std::abs(mean - target_mean) < 4.0 * se);
    CHECK(std::abs(var - target_var) / target_var < 0.05);
}

TEST_CASE("predict_x0 inverts forward_noise for every t") {
    const NoiseSchedule s = default_schedule();
    const ImageTensor x0 = testutil::random_image(21, 4, 4, 3).to_symmetric();
    Rng rng(22);
    const ImageTensor noise = rng.gaussian_image(4, 4, 3, Range::Symmetric);
    for (int t : {1, 2, 10, 100, 500, 999, 1000}) {
        const ImageTensor xt = forward_noise(x0, t, s, noise);
        const ImageTensor rec = predict_x0(xt, noise, t, s);
        for (size_t i = 0; i < x0.size(); ++i) {
            const double denom = std::max(std::abs(x0[i]), 1e-3);
            CHECK(std::abs(rec[i] - x0[i]) / denom < 1e-6);
        }
    }
}

TEST_CASE("predict_x0 trivial and oracle cases") {
    const NoiseSchedule s = NoiseSchedule::make(100, BetaSpec::linear(0.001, 0.05));
    const ImageTensor xt = testutil::random_image(31, 4, 4, 1).to_symmetric();
    const ImageTensor zeros = ImageTensor::zeros_like(xt);
    const int t = 60;

    const ImageTensor no_eps = predict_x0(xt, zeros, t, s);
    for (size_t i = 0; i < xt.size(); ++i)
        CHECK(no_eps[i] ==
              doctest::Approx(xt[i] / std::sqrt(s.alpha_bar(t))).epsilon(1e-13));

    // Independent elementwise evaluation of the same estimate.
    Rng rng(32);
    const ImageTensor eps = rng.gaussian_image(4, 4, 1, Range::Symmetric);
    const ImageTensor got = predict_x0(xt, eps, t, s);
    const double ab = s.alpha_bar(t);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const double expected =
                (xt.at(y, x, 0) - std::sqrt(1.0 - ab) * eps.at(y, x, 0)) /
                std::sqrt(ab);
            CHECK(got.at(y, x, 0) == doctest::Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("posterior mean and variance") {
    const NoiseSchedule s = NoiseSchedule::make(50, BetaSpec::constant(0.04));
    const ImageTensor xt = testutil::random_image(41, 3, 3, 1).to_symmetric();
    const ImageTensor zeros = ImageTensor::zeros_like(xt);
    const int t = 25;

    SUBCASE("eps = 0 scales by 1/sqrt(alpha)") {
        const Posterior p = posterior_mean_var(xt, zeros, t, s);
        for (size_t i = 0; i < xt.size(); ++i)
            CHECK(p.mean[i] ==
                  doctest::Approx(xt[i] / std::sqrt(s.alpha(t))).epsilon(1e-13));
        CHECK(p.var == doctest::Approx(s.posterior_var(t)).epsilon(1e-14));
    }

    SUBCASE("single-step schedule closed form") {
        const NoiseSchedule one = NoiseSchedule::make(1, BetaSpec::constant(0.3));
        ImageTensor x(1, 1, 1, Range::Symmetric, 0.8);
        ImageTensor e(1, 1, 1, Range::Symmetric, 0.5);
        const Posterior p = posterior_mean_var(x, e, 1, one);
        // (x - 0.3 * e / sqrt(0.3)) / sqrt(0.7), hand arithmetic:
        const double expected = (0.8 - 0.3 * 0.5 / std::sqrt(0.3)) / std::sqrt(0.7);
        CHECK(p.mean[0] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(p.var == doctest::Approx(0.3).epsilon(1e-14));
    }

    SUBCASE("matches an independent re-implementation") {
        Rng rng(55);
        const ImageTensor eps = rng.gaussian_image(3, 3, 1, Range::Symmetric);
        const Posterior p = posterior_mean_var(xt, eps, t, s);
        const double beta = s.beta(t);
        const double ab = s.alpha_bar(t);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) {
                const double expected =
                    (1.0 / std::sqrt(1.0 - beta)) *
                    (xt.at(y, x, 0) -
                     beta * eps.at(y, x, 0) / std::sqrt(1.0 - ab));
                CHECK(p.mean.at(y, x, 0) == doctest::Approx(expected).epsilon(1e-12));
            }
        const double expected_var =
            (1.0 - s.alpha_bar(t - 1)) / (1.0 - ab) * beta;
        CHECK(p.var == doctest::Approx(expected_var).epsilon(1e-12));
    }

    SUBCASE("t = 0 is a step error") {
        CHECK_THROWS_AS(posterior_mean_var(xt, zeros, 0, s), StepError);
    }
}
