// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace chanest {

// Deterministic substream generator. Every (seed, stream, substream) triple
// yields an independent reproducible sequence, so a Monte Carlo trial can be
// regenerated in isolation no matter which worker thread runs it or in which
// order trials are scheduled.
//
// All draws are fully specified by the C++ standard (mt19937_64 plus our own
// Box-Muller), so sequences are identical across platforms.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0,
                       std::uint64_t substream = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform();

    // Standard normal N(0, 1).
    double normal();

    // Circularly symmetric complex normal CN(0, 1): variance 1/2 per component.
    std::complex<double> cnormal();

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace chanest
