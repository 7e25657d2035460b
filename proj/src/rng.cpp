#include "normopt/rng.hpp"

#include <cmath>

namespace normopt {

static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngStream RngStream::split(std::uint64_t stream_id) const {
    return RngStream(mix64(mix64(seed_ ^ 0xa0761d6478bd642fULL) + stream_id));
}

std::uint64_t RngStream::next_u64() { return mix64(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

double RngStream::uniform() {
    // top 53 bits give a double in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u is kept away from 0 so the log is finite
    double u = 0.0;
    do {
        u = uniform();
    } while (u <= 0.0);
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * M_PI * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Matrix gaussian(RngStream& rng, std::size_t rows, std::size_t cols, double std_dev) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std_dev * rng.gaussian();
    return m;
}

}  // namespace normopt
