#pragma once

#include <cstdint>

#include "normopt/matrix.hpp"

namespace normopt {

// Counter-based pseudorandom stream (splitmix64 finalizer over seed+counter).
// Every consumer owns its own stream, split off a master seed, so draws are
// reproducible bit-for-bit regardless of evaluation order elsewhere.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    // Derives an independent stream; (seed, id) pairs never collide in practice
    // because the finalizer mixes both words through two rounds.
    RngStream split(std::uint64_t stream_id) const;

    std::uint64_t next_u64();
    // uniform on [0, 1)
    double uniform();
    // standard normal via Box-Muller; draws two uniforms per pair and caches
    // the second value
    double gaussian();

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// rows x cols matrix with i.i.d. N(0, std^2) entries; std = 0 gives zeros
Matrix gaussian(RngStream& rng, std::size_t rows, std::size_t cols, double std_dev);

}  // namespace normopt
