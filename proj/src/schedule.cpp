#include "normopt/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace normopt {

// --- stepsize schedules -------------------------------------------------------

Schedule Schedule::constant() { return Schedule{}; }

Schedule Schedule::linear_decay(std::size_t n) {
    if (n == 0) throw std::invalid_argument("schedule: linear decay needs a positive horizon");
    Schedule s;
    s.kind_ = Kind::LinearDecay;
    s.n_ = n;
    return s;
}

Schedule Schedule::cosine(std::size_t n) {
    if (n == 0) throw std::invalid_argument("schedule: cosine needs a positive horizon");
    Schedule s;
    s.kind_ = Kind::Cosine;
    s.n_ = n;
    return s;
}

Schedule Schedule::wsd(std::size_t k_w, std::size_t k_s, std::size_t n) {
    if (!(k_w <= k_s && k_s < n))
        throw std::invalid_argument("schedule: wsd needs k_w <= k_s < n");
    Schedule s;
    s.kind_ = Kind::Wsd;
    s.n_ = n;
    s.warmup_ = k_w;
    s.stable_ = k_s;
    return s;
}

Schedule Schedule::parse(const std::string& text, std::size_t n) {
    if (text == "const") return constant();
    if (text == "linear") return linear_decay(n);
    if (text == "cosine") return cosine(n);
    if (text.rfind("wsd:", 0) == 0) {
        const std::size_t sep = text.find(':', 4);
        if (sep == std::string::npos)
            throw std::invalid_argument("schedule: expected wsd:<k_w>:<k_s> in '" + text + "'");
        std::size_t k_w = 0, k_s = 0;
        try {
            k_w = std::stoul(text.substr(4, sep - 4));
            k_s = std::stoul(text.substr(sep + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("schedule: bad wsd breakpoints in '" + text + "'");
        }
        return wsd(k_w, k_s, n);
    }
    throw std::invalid_argument("schedule: unknown spec '" + text + "'");
}

double Schedule::value(std::size_t k) const {
    if (kind_ == Kind::Constant) return 1.0;
    if (k > n_) throw std::invalid_argument("schedule: step index past the horizon");
    const double kk = static_cast<double>(k);
    const double nn = static_cast<double>(n_);
    switch (kind_) {
        case Kind::LinearDecay:
            return 1.0 - kk / nn;
        case Kind::Cosine:
            return 0.5 * (1.0 + std::cos(M_PI * kk / nn));
        case Kind::Wsd:
            if (k < warmup_) return kk / static_cast<double>(warmup_);
            if (k < stable_) return 1.0;
            return (nn - kk) / static_cast<double>(n_ - stable_);
        case Kind::Constant:
            break;
    }
    throw std::logic_error("schedule: unreachable");
}

// --- averagers ---------------------------------------------------------------

Averager Averager::none() { return Averager{}; }

Averager Averager::polyak() {
    Averager a;
    a.kind_ = Kind::PolyakRuppert;
    return a;
}

Averager Averager::ema(double tau) {
    if (!(tau >= 0.0 && tau < 1.0))
        throw std::invalid_argument("averager: ema factor must lie in [0, 1)");
    Averager a;
    a.kind_ = Kind::Ema;
    a.tau_ = tau;
    return a;
}

Averager Averager::schedule_free(double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("averager: schedule-free beta must lie in [0, 1]");
    Averager a;
    a.kind_ = Kind::ScheduleFree;
    a.beta_ = beta;
    return a;
}

Averager Averager::schedule_free_linear(std::size_t n) {
    if (n == 0) throw std::invalid_argument("averager: linear beta needs a positive horizon");
    Averager a;
    a.kind_ = Kind::ScheduleFree;
    a.beta_linear_ = true;
    a.beta_horizon_ = n;
    return a;
}

Averager Averager::parse(const std::string& text) {
    if (text == "none") return none();
    if (text == "polyak") return polyak();
    auto tail_value = [&](std::size_t off, const char* what) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text.substr(off), &used);
            if (used != text.size() - off) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("averager: bad ") + what + " in '" + text + "'");
        }
    };
    if (text.rfind("ema:", 0) == 0) return ema(tail_value(4, "ema factor"));
    if (text.rfind("schedule_free:", 0) == 0) return schedule_free(tail_value(14, "beta"));
    throw std::invalid_argument("averager: unknown spec '" + text + "'");
}

void Averager::ingest(std::span<const Matrix> x) {
    if (kind_ == Kind::None) return;  // nothing to maintain
    if (buf_.empty()) {
        buf_.assign(x.begin(), x.end());
        count_ = 1;
        return;
    }
    if (buf_.size() != x.size()) throw std::invalid_argument("averager: block count changed");
    ++count_;
    switch (kind_) {
        case Kind::None:
            break;
        case Kind::PolyakRuppert:
        case Kind::ScheduleFree: {
            // incremental mean of every iterate seen, the first included
            const double w = 1.0 / static_cast<double>(count_);
            for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i].scale_add(1.0 - w, x[i], w);
            break;
        }
        case Kind::Ema:
            for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i].scale_add(tau_, x[i], 1.0 - tau_);
            break;
    }
}

const std::vector<Matrix>& Averager::average() const {
    if (buf_.empty()) throw std::logic_error("averager: nothing ingested yet");
    return buf_;
}

double Averager::beta_at(std::size_t k) const {
    if (!beta_linear_) return beta_;
    if (k > beta_horizon_) throw std::invalid_argument("averager: step index past the horizon");
    return static_cast<double>(k) / static_cast<double>(beta_horizon_);
}

std::vector<Matrix> Averager::interpolate(std::span<const Matrix> x, std::size_t k) const {
    if (kind_ != Kind::ScheduleFree)
        throw std::logic_error("averager: interpolation is a schedule-free operation");
    const double b = beta_at(k);
    std::vector<Matrix> y(x.begin(), x.end());
    if (buf_.empty()) return y;  // z primes to x, so y = x
    if (buf_.size() != x.size()) throw std::invalid_argument("averager: block count mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i].scale_add(1.0 - b, buf_[i], b);
    return y;
}

std::vector<Matrix> schedule_free_step(
    Averager& av,
    const std::function<void(std::vector<Matrix>& x, const std::vector<Matrix>& y)>& base_step,
    std::vector<Matrix>& x, std::size_t k) {
    if (av.kind() != Averager::Kind::ScheduleFree)
        throw std::invalid_argument("schedule_free_step: averager is not schedule-free");
    const std::span<const Matrix> before(x.data(), x.size());
    if (!av.has_buffer()) av.ingest(before);  // primes z^0 = x^0
    std::vector<Matrix> y = av.interpolate(before, k);
    base_step(x, y);
    // base_step may assign a whole new vector into x, so the old span's
    // backing storage is not safe to reuse here
    av.ingest(std::span<const Matrix>(x.data(), x.size()));
    return y;
}

}  // namespace normopt
