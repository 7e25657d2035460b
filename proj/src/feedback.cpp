#include "normopt/feedback.hpp"

#include <cmath>
#include <stdexcept>

namespace normopt {

AlphaSchedule AlphaSchedule::constant(double v) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("alpha schedule: constant must lie in [0, 1]");
    return {Kind::Constant, v};
}

AlphaSchedule AlphaSchedule::inv_sqrt() { return {Kind::InvSqrt, 0.0}; }

AlphaSchedule AlphaSchedule::parse(const std::string& text) {
    if (text == "inv_sqrt") return inv_sqrt();
    if (text.rfind("const:", 0) == 0) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text.substr(6), &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("alpha schedule: bad constant in '" + text + "'");
        }
        if (used != text.size() - 6)
            throw std::invalid_argument("alpha schedule: bad constant in '" + text + "'");
        return constant(v);
    }
    throw std::invalid_argument("alpha schedule: unknown spec '" + text + "'");
}

double AlphaSchedule::at(std::size_t k) const {
    if (k < 1) throw std::invalid_argument("alpha schedule: defined for k >= 1");
    switch (kind) {
        case Kind::Constant:
            return value;
        case Kind::InvSqrt:
            return 1.0 / std::sqrt(static_cast<double>(k));
    }
    throw std::logic_error("alpha schedule: unreachable");
}

FeedbackKind parse_feedback_kind(const std::string& text) {
    if (text == "plain") return FeedbackKind::Plain;
    if (text == "momentum") return FeedbackKind::Momentum;
    if (text == "lion") return FeedbackKind::Lion;
    if (text == "storm") return FeedbackKind::Storm;
    throw std::invalid_argument("feedback: unknown kind '" + text + "'");
}

FeedbackState::FeedbackState(FeedbackKind kind, AlphaSchedule alpha, AlphaSchedule beta)
    : kind_(kind), alpha_(alpha), beta_(beta) {}

const Matrix& FeedbackState::update(const Matrix& g, const Matrix* g_prev_same_sample) {
    if (!g.is_finite()) throw std::invalid_argument("feedback: non-finite gradient");
    if (!primed_) {
        // d^0 = g^0 for every kind; Lion's buffer and Storm's history start there too
        d_ = g;
        if (kind_ == FeedbackKind::Lion || kind_ == FeedbackKind::Storm) aux_ = g;
        primed_ = true;
        step_ = 1;
        return d_;
    }
    if (!g.same_shape(d_)) throw std::invalid_argument("feedback: gradient shape changed");

    const std::size_t k = step_;  // this call ingests g^k
    switch (kind_) {
        case FeedbackKind::Plain:
            d_ = g;
            break;
        case FeedbackKind::Momentum: {
            const double a = alpha_.at(k);
            d_.scale_add(1.0 - a, g, a);
            break;
        }
        case FeedbackKind::Lion: {
            const double a = alpha_.at(k);
            const double b = beta_.at(k);
            // emit from the buffer as it stood before this gradient
            d_ = aux_;
            d_.scale_add(1.0 - b, g, b);
            aux_.scale_add(1.0 - a, g, a);
            break;
        }
        case FeedbackKind::Storm: {
            if (g_prev_same_sample == nullptr)
                throw std::invalid_argument(
                    "feedback: storm needs the previous-iterate gradient on the current sample");
            if (!g_prev_same_sample->same_shape(d_))
                throw std::invalid_argument("feedback: storm correction shape mismatch");
            const double a = alpha_.at(k);
            // (1-a) d + a g + (1-a)(g - g_prev)
            d_.scale_add(1.0 - a, g, 1.0);
            d_.add_scaled(*g_prev_same_sample, -(1.0 - a));
            break;
        }
    }
    ++step_;
    return d_;
}

const Matrix& FeedbackState::current() const {
    if (!primed_) throw std::logic_error("feedback: no gradient ingested yet");
    return d_;
}

}  // namespace normopt
