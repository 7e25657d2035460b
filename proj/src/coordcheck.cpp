#include "normopt/coordcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace normopt {
namespace {

struct LayerStats {
    double l1 = 0.0;
    double rms = 0.0;
    bool finite = true;
};

LayerStats entry_stats(const Matrix& m) {
    LayerStats s;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        abs_sum += std::abs(m[i]);
        sq_sum += m[i] * m[i];
    }
    const double n = static_cast<double>(m.size());
    s.l1 = abs_sum / n;
    s.rms = std::sqrt(sq_sum / n);
    s.finite = m.is_finite() && std::isfinite(s.l1) && std::isfinite(s.rms);
    return s;
}

// Layer matrices in reporting order: preactivations h_1..h_L, then the
// network output as layer L+1.
std::vector<const Matrix*> layer_views(const ForwardCache& cache) {
    std::vector<const Matrix*> views;
    views.reserve(cache.preacts.size() + 1);
    for (const Matrix& h : cache.preacts) views.push_back(&h);
    views.push_back(&cache.output);
    return views;
}

}  // namespace

std::vector<CoordRow> coord_check(const std::function<CoordSetup(std::size_t)>& make,
                                  std::span<const std::size_t> widths, std::size_t steps,
                                  const Matrix& probe) {
    if (widths.empty()) throw std::invalid_argument("coord_check: no widths");
    std::vector<CoordRow> rows;
    for (std::size_t width : widths) {
        CoordSetup setup = make(width);
        ForwardCache cache = forward(setup.net, probe);
        std::vector<const Matrix*> views = layer_views(cache);
        std::vector<Matrix> baseline;
        baseline.reserve(views.size());
        for (const Matrix* h : views) baseline.push_back(*h);

        for (std::size_t step = 0; step <= steps; ++step) {
            if (step > 0) {
                setup.step(setup.net, step - 1);
                cache = forward(setup.net, probe);
                views = layer_views(cache);
            }
            for (std::size_t l = 0; l < views.size(); ++l) {
                const LayerStats now = entry_stats(*views[l]);
                Matrix delta = *views[l];
                delta -= baseline[l];
                const LayerStats drift = entry_stats(delta);
                CoordRow row;
                row.width = width;
                row.step = step;
                row.layer = l + 1;
                row.l1 = now.l1;
                row.rms = now.rms;
                row.delta_l1 = drift.l1;
                row.delta_rms = drift.rms;
                row.diverged = !now.finite || !drift.finite;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

const char* to_string(CoordVerdict v) {
    switch (v) {
        case CoordVerdict::FeatureLearning: return "feature_learning";
        case CoordVerdict::Lazy: return "lazy";
        case CoordVerdict::Unstable: return "unstable";
        case CoordVerdict::InsufficientWidths: return "insufficient_widths";
    }
    throw std::logic_error("coord verdict: unknown value");
}

CoordVerdict coord_verdict(std::span<const CoordRow> rows, std::size_t layer,
                           std::size_t final_step) {
    struct Point {
        std::size_t width;
        double value;
        bool diverged;
    };
    std::vector<Point> points;
    for (const CoordRow& row : rows) {
        if (row.layer != layer || row.step != final_step) continue;
        points.push_back({row.width, row.delta_rms, row.diverged});
    }
    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.width < b.width; });
    if (points.size() < 2) return CoordVerdict::InsufficientWidths;
    for (const Point& p : points) {
        if (p.diverged || !std::isfinite(p.value)) return CoordVerdict::Unstable;
    }

    const double lo_end = points.front().value;
    const double hi_end = points.back().value;
    double lo = points.front().value;
    double hi = lo;
    for (const Point& p : points) {
        lo = std::min(lo, p.value);
        hi = std::max(hi, p.value);
    }
    // Degenerate zeros: no drift anywhere is lazy, drift appearing only at
    // the wide end is unbounded growth.
    if (hi == 0.0) return CoordVerdict::Lazy;
    if (lo_end == 0.0) return CoordVerdict::Unstable;
    if (hi_end == 0.0) return CoordVerdict::Lazy;

    const double endpoint_ratio = hi_end / lo_end;
    if (endpoint_ratio >= 4.0) return CoordVerdict::Unstable;
    if (endpoint_ratio <= 0.25) return CoordVerdict::Lazy;
    if (lo > 0.0 && hi / lo <= 4.0) return CoordVerdict::FeatureLearning;
    return CoordVerdict::Unstable;
}

}  // namespace normopt
