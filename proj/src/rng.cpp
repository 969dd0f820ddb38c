// SPDX-License-Identifier: Apache-2.0
#include "chanest/rng.hpp"

#include <cmath>

namespace chanest {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    // Chain the three identifiers through splitmix64 so nearby values land in
    // unrelated regions of the mt19937_64 state space.
    std::uint64_t state = seed;
    std::uint64_t mixed = splitmix64(state);
    state ^= stream * 0xbf58476d1ce4e5b9ULL;
    mixed ^= splitmix64(state);
    state ^= substream * 0x94d049bb133111ebULL;
    mixed ^= splitmix64(state);

    std::uint32_t words[8];
    std::uint64_t derive = mixed;
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t w = splitmix64(derive);
        words[2 * i] = static_cast<std::uint32_t>(w);
        words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
    }
    std::seed_seq seq(words, words + 8);
    gen_.seed(seq);
}

std::uint64_t RngStream::next_u64() { return gen_(); }

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; log1p(-u) keeps the argument strictly positive for u in [0,1).
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log1p(-u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::complex<double> RngStream::cnormal() {
    const double re = normal();
    const double im = normal();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
}

} // namespace chanest
