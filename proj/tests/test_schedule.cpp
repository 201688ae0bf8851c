#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "cfdiff/schedule.hpp"

using namespace cfdiff;

TEST_CASE("single-step schedule") {
    NoiseSchedule s(1, 0.1, 0.1);
    CHECK(s.beta(1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.sigma(1) == 0.0);
}

TEST_CASE("constant-beta cumulative products") {
    NoiseSchedule s(3, 0.1, 0.1);
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.81).epsilon(1e-12));
    CHECK(s.alpha_bar(3) == doctest::Approx(0.729).epsilon(1e-12));
}

TEST_CASE("default schedule alpha_bar decreasing and tiny at T") {
    NoiseSchedule s = default_schedule();
    // independent oracle: recompute the cumulative product directly
    double abar = 1.0;
    for (int t = 1; t <= s.steps(); ++t) {
        double beta = 1e-4 + (0.02 - 1e-4) * (t - 1) / (s.steps() - 1);
        abar *= 1.0 - beta;
        CHECK(s.alpha_bar(t) == doctest::Approx(abar).epsilon(1e-12));
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
    CHECK(s.alpha_bar(s.steps()) > 0.0);
    CHECK(s.alpha_bar(s.steps()) < 1e-4);
}

TEST_CASE("recurrence alpha_bar_t = alpha_bar_{t-1} * (1 - beta_t)") {
    NoiseSchedule s(200, 3e-4, 0.05);
    for (int t = 1; t <= 200; ++t)
        CHECK(s.alpha_bar(t) == doctest::Approx(s.alpha_bar(t - 1) * (1.0 - s.beta(t)))
                                    .epsilon(1e-15));
}

TEST_CASE("posterior sigma bounded by forward beta") {
    NoiseSchedule s = default_schedule();
    for (int t = 1; t <= s.steps(); ++t) CHECK(s.sigma(t) * s.sigma(t) <= s.beta(t) + 1e-15);
}

TEST_CASE("guidance scale") {
    SUBCASE("symmetry point: abar = 0.5") {
        NoiseSchedule s(1, 0.5, 0.5);
        CHECK(s.guidance_scale(1, 1.0) == 1.0);
    }
    SUBCASE("worked value at abar = 0.81") {
        NoiseSchedule s(3, 0.1, 0.1);
        double expected = 1e6 * std::sqrt(1.0 - 0.81) / std::sqrt(0.81);
        CHECK(s.guidance_scale(2, 1e6) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(s.guidance_scale(2, 1e6) == doctest::Approx(484322.105).epsilon(1e-5));
    }
    SUBCASE("zero base scale") {
        NoiseSchedule s(5, 0.01, 0.2);
        for (int t = 1; t <= 5; ++t) CHECK(s.guidance_scale(t, 0.0) == 0.0);
    }
    SUBCASE("strictly increasing in t") {
        NoiseSchedule s = default_schedule();
        for (int t = 2; t <= s.steps(); ++t)
            CHECK(s.guidance_scale(t, 2.5) > s.guidance_scale(t - 1, 2.5));
    }
}

TEST_CASE("parameter and range errors") {
    CHECK_THROWS_AS(NoiseSchedule(0, 0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule(10, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule(10, 0.2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule(10, 0.1, 1.0), std::invalid_argument);
    NoiseSchedule s(3, 0.1, 0.1);
    CHECK_THROWS_AS(s.alpha_bar(-1), std::out_of_range);
    CHECK_THROWS_AS(s.alpha_bar(4), std::out_of_range);
    CHECK_THROWS_AS(s.beta(0), std::out_of_range);
    CHECK_THROWS_AS(s.guidance_scale(0, 1.0), std::out_of_range);
    CHECK_THROWS_AS(s.guidance_scale(1, -1.0), std::invalid_argument);
}
