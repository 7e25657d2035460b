#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "normopt/matrix.hpp"

namespace normopt {

// Stepsize multiplier s_k on [0, n]. Config strings: "const", "linear",
// "cosine", "wsd:<k_w>:<k_s>" (warmup to k_w, hold to k_s, linear decay to n).
class Schedule {
public:
    enum class Kind { Constant, LinearDecay, Cosine, Wsd };

    static Schedule constant();
    static Schedule linear_decay(std::size_t n);
    static Schedule cosine(std::size_t n);
    static Schedule wsd(std::size_t k_w, std::size_t k_s, std::size_t n);
    static Schedule parse(const std::string& text, std::size_t n);

    Kind kind() const { return kind_; }
    std::size_t horizon() const { return n_; }

    // s_k; rejects k > n for the horizon-bound kinds
    double value(std::size_t k) const;

private:
    Kind kind_ = Kind::Constant;
    std::size_t n_ = 0;
    std::size_t warmup_ = 0;
    std::size_t stable_ = 0;
};

// Weight averaging over the iterate sequence. The iterate is a list of
// parameter blocks; scalars ride along as 1 x 1 blocks.
//
//   None          average tracks the raw iterate
//   PolyakRuppert arithmetic mean of every iterate ingested
//   Ema           xhat <- tau * xhat + (1 - tau) * x
//   ScheduleFree  keeps the running-mean buffer z and evaluates gradients at
//                 y^k = (1 - beta_k) x^k + beta_k z^k
class Averager {
public:
    enum class Kind { None, PolyakRuppert, Ema, ScheduleFree };

    static Averager none();
    static Averager polyak();
    static Averager ema(double tau);
    static Averager schedule_free(double beta);
    // beta_k = k / n variant of the schedule-free interpolation
    static Averager schedule_free_linear(std::size_t n);
    // "none", "polyak", "ema:<tau>", "schedule_free:<beta>"
    static Averager parse(const std::string& text);

    Kind kind() const { return kind_; }
    bool has_buffer() const { return !buf_.empty(); }

    // folds iterate x^k into the buffers; the first call primes them
    void ingest(std::span<const Matrix> x);
    // the exported average (for ScheduleFree this is the z buffer)
    const std::vector<Matrix>& average() const;
    // ScheduleFree only: y^k = (1 - beta_k) x^k + beta_k z^k; before any
    // ingest the buffer is taken to be x itself
    std::vector<Matrix> interpolate(std::span<const Matrix> x, std::size_t k) const;

    double beta_at(std::size_t k) const;

private:
    Kind kind_ = Kind::None;
    double tau_ = 0.0;
    double beta_ = 0.9;
    bool beta_linear_ = false;
    std::size_t beta_horizon_ = 0;
    std::vector<Matrix> buf_;
    std::size_t count_ = 0;
};

// One schedule-free round: evaluates y^k, lets `base_step` advance x using
// gradients measured at y, ingests the new iterate, and returns y.
std::vector<Matrix> schedule_free_step(
    Averager& av,
    const std::function<void(std::vector<Matrix>& x, const std::vector<Matrix>& y)>& base_step,
    std::vector<Matrix>& x, std::size_t k);

}  // namespace normopt
