#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "normopt/net.hpp"

namespace normopt {

// One measurement: layer runs 1..L+1 where L+1 is the network output, and
// the metrics are the mean absolute coordinate and the RMS of the layer's
// preactivation on the probe batch. delta_* measure the drift h(step) -
// h(init) in the same two metrics.
struct CoordRow {
    std::size_t width = 0;
    std::size_t step = 0;
    std::size_t layer = 0;
    double l1 = 0.0;
    double rms = 0.0;
    double delta_l1 = 0.0;
    double delta_rms = 0.0;
    bool diverged = false;
};

// A freshly built network plus the closure that advances it one training
// step; the factory owns seeding and optimizer state.
struct CoordSetup {
    Mlp net;
    std::function<void(Mlp&, std::size_t)> step;
};

// Runs `steps` training steps at every width and records the probe-batch
// statistics per layer before training (step 0) and after each step. A width
// that blows up is flagged on its rows, never thrown.
std::vector<CoordRow> coord_check(const std::function<CoordSetup(std::size_t)>& make,
                                  std::span<const std::size_t> widths, std::size_t steps,
                                  const Matrix& probe);

enum class CoordVerdict { FeatureLearning, Lazy, Unstable, InsufficientWidths };

const char* to_string(CoordVerdict v);

// Classifies one layer from its final-step delta RMS across widths: growth
// of 4x or more from the narrowest to the widest net (or any divergence) is
// unstable, decay to a quarter or less is lazy, and a max/min band within 4x
// is feature learning.
CoordVerdict coord_verdict(std::span<const CoordRow> rows, std::size_t layer,
                           std::size_t final_step);

}  // namespace normopt
