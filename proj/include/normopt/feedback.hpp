#pragma once

#include <optional>
#include <string>

#include "normopt/matrix.hpp"

namespace normopt {

// Mixing weight sequence for the feedback recursions, indexed from k = 1
// (the k = 0 step always passes the raw gradient through).
// Config strings: "const:<v>" and "inv_sqrt".
struct AlphaSchedule {
    enum class Kind { Constant, InvSqrt };

    Kind kind = Kind::Constant;
    double value = 0.1;

    static AlphaSchedule constant(double v);
    static AlphaSchedule inv_sqrt();
    static AlphaSchedule parse(const std::string& text);

    double at(std::size_t k) const;
};

enum class FeedbackKind { Plain, Momentum, Lion, Storm };

FeedbackKind parse_feedback_kind(const std::string& text);

// Turns the raw stochastic gradient stream g^0, g^1, ... into the feedback
// direction d^k an optimizer consumes. All four estimators initialize their
// buffers to g^0 on the first call (no bias correction).
//
//   Plain     d^k = g^k
//   Momentum  d^k = (1 - a_k) d^{k-1} + a_k g^k
//   Lion      keeps an auxiliary buffer m^k = (1 - a_k) m^{k-1} + a_k g^k and
//             emits d^k = (1 - b_k) m^{k-1} + b_k g^k; with b_k = a_k this is
//             exactly Momentum, with b_k = 1 it is Plain, and b_k = 0 emits
//             the buffer one step late
//   Storm     d^k = (1 - a_k) d^{k-1} + a_k g^k
//                   + (1 - a_k) (g^k - g^{k-1} evaluated on the k-th sample),
//             so the caller must supply that second gradient for k >= 1
class FeedbackState {
public:
    explicit FeedbackState(FeedbackKind kind, AlphaSchedule alpha = AlphaSchedule::constant(0.1),
                           AlphaSchedule beta = AlphaSchedule::constant(0.9));

    FeedbackKind kind() const { return kind_; }
    std::size_t steps_taken() const { return step_; }

    // Ingests g^k and returns d^k. `g_prev_same_sample` is Storm's gradient at
    // the previous iterate on the current sample; Storm rejects its absence
    // past step 0 and the other kinds ignore it.
    const Matrix& update(const Matrix& g, const Matrix* g_prev_same_sample = nullptr);

    const Matrix& current() const;

private:
    FeedbackKind kind_;
    AlphaSchedule alpha_;
    AlphaSchedule beta_;
    Matrix d_;    // emitted direction
    Matrix aux_;  // Lion's slow buffer / Storm's previous direction
    std::size_t step_ = 0;
    bool primed_ = false;
};

}  // namespace normopt
