// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chanest/rng.hpp"

using chanest::RngStream;

TEST_CASE("identical identifiers reproduce the sequence") {
    RngStream a(42, 7, 3);
    RngStream b(42, 7, 3);
    for (int i = 0; i < 64; ++i)
        CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct substreams decorrelate") {
    RngStream a(42, 7, 3);
    RngStream b(42, 7, 4);
    RngStream c(42, 8, 3);
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t va = a.next_u64();
        equal_ab += va == b.next_u64();
        equal_ac += va == c.next_u64();
    }
    CHECK(equal_ab == 0);
    CHECK(equal_ac == 0);
}

TEST_CASE("uniform stays inside [0, 1)") {
    RngStream rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments") {
    RngStream rng(5);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("complex normal has unit total variance") {
    RngStream rng(6);
    const int n = 100000;
    double power = 0.0;
    std::complex<double> mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const std::complex<double> z = rng.cnormal();
        power += std::norm(z);
        mean += z;
    }
    CHECK(power / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(mean) / n < 0.01);
}
