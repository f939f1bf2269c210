#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nafreach/errors.hpp"
#include "nafreach/exploration.hpp"

using namespace nafreach;

TEST_CASE("sigma schedule: linear from 0.35 to 0.05, then flat") {
    OuProcess ou(4);
    CHECK(ou.sigma_at(0) == 0.35);
    CHECK(ou.sigma_at(25000) == doctest::Approx(0.20).epsilon(1e-12));
    CHECK(ou.sigma_at(50000) == 0.05);
    CHECK(ou.sigma_at(5000000) == 0.05);
    double prev = 1.0;
    for (long long t = 0; t <= 60000; t += 1000) {
        const double s = ou.sigma_at(t);
        CHECK(s <= prev);
        CHECK(s >= 0.05);
        CHECK(s <= 0.35);
        prev = s;
    }
}

TEST_CASE("zero sigma decays deterministically") {
    Rng rng(1);
    OuProcess ou(1, 0.15, 0.0, 0.0, 1, 1.0);
    ou.x[0] = 0.0;
    ou.step(10, rng);
    CHECK(ou.x[0] == 0.0);

    OuProcess full(1, 1.0, 0.0, 0.0, 1, 1.0);  // theta=1, dt=1: full mean reversion
    full.x[0] = 1.0;
    full.step(10, rng);
    CHECK(full.x[0] == 0.0);
}

TEST_CASE("long-run standard deviation matches the discrete stationary formula") {
    Rng rng(21);
    OuProcess ou(1, 0.15, 0.2, 0.2, 1, 1.0);  // constant sigma 0.2
    double sum = 0, sumsq = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        ou.step(0, rng);
        sum += ou.x[0];
        sumsq += ou.x[0] * ou.x[0];
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sumsq / n - mean * mean);
    // discrete stationary sd: sigma sqrt(dt / (2 theta dt - theta^2 dt^2))
    const double want = 0.2 * std::sqrt(1.0 / (2 * 0.15 - 0.15 * 0.15));
    CHECK(sd == doctest::Approx(want).epsilon(0.05));
    // zero-mean within 3 standard errors (samples are correlated; the
    // effective sample count shrinks by roughly the mixing time 1/theta)
    const double se = sd / std::sqrt(n * 0.15 / 2.0);
    CHECK(std::abs(mean) < 3 * se);
}

TEST_CASE("reset zeroes the process state") {
    Rng rng(31);
    OuProcess ou(6);
    for (int i = 0; i < 100; ++i) ou.step(i, rng);
    ou.reset();
    for (double v : ou.x) CHECK(v == 0.0);
}

TEST_CASE("seeded noise trajectories are reproducible") {
    Rng a(77), b(77);
    OuProcess oa(3), ob(3);
    for (int t = 0; t < 1000; ++t) {
        const auto& xa = oa.step(t, a);
        const auto& xb = ob.step(t, b);
        for (std::size_t i = 0; i < xa.size(); ++i) CHECK(xa[i] == xb[i]);
    }
}

TEST_CASE("apply_noise clamps into the unit interval") {
    CHECK(apply_noise({0.3, 0.7}, {0.0, 0.0}) == std::vector<double>{0.3, 0.7});
    CHECK(apply_noise({0.9}, {0.5}) == std::vector<double>{1.0});
    CHECK(apply_noise({0.1}, {-0.5}) == std::vector<double>{0.0});
    Rng rng(41);
    OuProcess ou(6);
    std::vector<double> action(6, 0.5);
    for (int t = 0; t < 5000; ++t) {
        const auto out = apply_noise(action, ou.step(t, rng));
        for (double v : out) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    CHECK_THROWS_AS(apply_noise({0.5}, {0.1, 0.2}), ContractViolation);
}

TEST_CASE("invalid schedules are rejected") {
    CHECK_THROWS_AS(OuProcess(0), ConfigError);
    CHECK_THROWS_AS(OuProcess(2, 0.15, 0.05, 0.35, 100, 1.0), ConfigError);  // increasing
    CHECK_THROWS_AS(OuProcess(2, 0.15, 0.35, 0.05, 0, 1.0), ConfigError);
}
