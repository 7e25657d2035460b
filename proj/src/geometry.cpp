#include "normopt/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "normopt/linalg.hpp"

namespace normopt {

// --- factories ---------------------------------------------------------------

Geometry Geometry::l2() { return Geometry(NormKind::EuclideanL2, 0, 0); }

Geometry Geometry::sign() { return Geometry(NormKind::MaxNormSign, 0, 0); }

static void check_dims(std::size_t p_out, std::size_t p_in, const char* kind) {
    if (p_out == 0 || p_in == 0)
        throw std::invalid_argument(std::string(kind) + ": dimensions must be positive");
}

Geometry Geometry::spectral_rms(std::size_t p_out, std::size_t p_in) {
    check_dims(p_out, p_in, "spectral_rms");
    return Geometry(NormKind::SpectralRms, p_out, p_in);
}

Geometry Geometry::spectral(std::size_t p_out, std::size_t p_in) {
    check_dims(p_out, p_in, "spectral");
    return Geometry(NormKind::SpectralPlain, p_out, p_in);
}

Geometry Geometry::colnorm(std::size_t p_out, std::size_t p_in) {
    check_dims(p_out, p_in, "colnorm");
    return Geometry(NormKind::ColNorm, p_out, p_in);
}

Geometry Geometry::rownorm(std::size_t p_out, std::size_t p_in) {
    check_dims(p_out, p_in, "rownorm");
    return Geometry(NormKind::RowNorm, p_out, p_in);
}

Geometry Geometry::mahalanobis_diag(Matrix h) {
    if (h.empty()) throw std::invalid_argument("mahalanobis_diag: empty diagonal");
    for (std::size_t i = 0; i < h.size(); ++i)
        if (!(h[i] > 0.0)) throw std::invalid_argument("mahalanobis_diag: diagonal must be positive");
    Geometry g(NormKind::MahalanobisDiag, h.rows(), h.cols());
    g.mahal_h_ = std::move(h);
    return g;
}

Geometry Geometry::parse(const std::string& kind, std::size_t p_out, std::size_t p_in) {
    if (kind == "l2") return l2();
    if (kind == "sign") return sign();
    if (kind == "spectral_rms") return spectral_rms(p_out, p_in);
    if (kind == "spectral") return spectral(p_out, p_in);
    if (kind == "colnorm") return colnorm(p_out, p_in);
    if (kind == "rownorm") return rownorm(p_out, p_in);
    if (kind == "mahalanobis_diag") {
        Matrix ones(p_out, p_in);
        ones.fill(1.0);
        return mahalanobis_diag(std::move(ones));
    }
    throw std::invalid_argument("geometry: unknown kind '" + kind + "'");
}

void Geometry::set_spectral_backend(SpectralBackend backend, std::size_t ns_iters) {
    if (backend == SpectralBackend::NewtonSchulz && ns_iters == 0)
        throw std::invalid_argument("geometry: Newton-Schulz backend needs at least one iteration");
    backend_ = backend;
    ns_iters_ = ns_iters;
}

void Geometry::check_shape(const Matrix& m, const char* op) const {
    switch (kind_) {
        case NormKind::EuclideanL2:
        case NormKind::MaxNormSign:
            if (m.empty()) throw std::invalid_argument(std::string(op) + ": empty matrix");
            return;
        case NormKind::MahalanobisDiag:
            if (!m.same_shape(mahal_h_))
                throw std::invalid_argument(std::string(op) + ": shape does not match diagonal");
            return;
        default:
            if (m.rows() != p_out_ || m.cols() != p_in_)
                throw std::invalid_argument(std::string(op) + ": shape does not match geometry");
            return;
    }
}

// --- norms ---------------------------------------------------------------

static double max_col_norm(const Matrix& w) {
    double best = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, j) * w(i, j);
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

static double max_row_norm(const Matrix& w) {
    double best = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) s += w(i, j) * w(i, j);
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

double Geometry::norm(const Matrix& w) const {
    check_shape(w, "geometry norm");
    switch (kind_) {
        case NormKind::EuclideanL2:
            return w.frobenius_norm();
        case NormKind::MaxNormSign:
            return w.max_abs();
        case NormKind::SpectralRms:
        case NormKind::SpectralPlain: {
            // sigma_max always comes from the exact factorization; the
            // Newton-Schulz backend only replaces the lmo direction
            const double smax = w.frobenius_norm() == 0.0 ? 0.0 : svd(w).sigma[0];
            if (kind_ == NormKind::SpectralPlain) return smax;
            return std::sqrt(static_cast<double>(p_in_) / static_cast<double>(p_out_)) * smax;
        }
        case NormKind::ColNorm:
            return max_col_norm(w) / std::sqrt(static_cast<double>(p_out_));
        case NormKind::RowNorm:
            return max_row_norm(w) * std::sqrt(static_cast<double>(p_in_));
        case NormKind::MahalanobisDiag: {
            double s = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                s += std::sqrt(mahal_h_[i]) * w[i] * w[i];
            return std::sqrt(s);
        }
    }
    throw std::logic_error("geometry norm: unreachable");
}

// --- lmo and dual norm -----------------------------------------------------

std::pair<Matrix, double> Geometry::lmo_with_dual(const Matrix& d) const {
    check_shape(d, "geometry lmo");
    Matrix out(d.rows(), d.cols());
    if (d.frobenius_norm() == 0.0) return {out, 0.0};

    switch (kind_) {
        case NormKind::EuclideanL2: {
            const double f = d.frobenius_norm();
            out = d;
            out *= -1.0 / f;
            return {std::move(out), f};
        }
        case NormKind::MaxNormSign: {
            double l1 = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                l1 += std::abs(d[i]);
                out[i] = d[i] > 0.0 ? -1.0 : (d[i] < 0.0 ? 1.0 : 0.0);
            }
            return {std::move(out), l1};
        }
        case NormKind::SpectralRms:
        case NormKind::SpectralPlain: {
            const double rms_scale =
                kind_ == NormKind::SpectralRms
                    ? std::sqrt(static_cast<double>(p_out_) / static_cast<double>(p_in_))
                    : 1.0;
            if (backend_ == SpectralBackend::Exact) {
                SvdResult f = svd(d);
                // Sum u_k v_k^T over the numerical range only. Zero singular
                // directions carry basis-completion columns whose orientation
                // is arbitrary; a rank-deficient input must not update the
                // complement of its own row/column space.
                double nuclear = 0.0;
                Matrix us = f.u;
                for (std::size_t k = 0; k < f.sigma.size(); ++k) {
                    nuclear += f.sigma[k];
                    if (f.sigma[k] == 0.0)
                        for (std::size_t i = 0; i < us.rows(); ++i) us(i, k) = 0.0;
                }
                out = matmul(us, f.vt);
                out *= -rms_scale;
                return {std::move(out), rms_scale * nuclear};
            }
            out = newton_schulz_polar(d, ns_iters_, 0.0);
            out *= -rms_scale;
            return {std::move(out), -dot(d, out)};
        }
        case NormKind::ColNorm: {
            const double root = std::sqrt(static_cast<double>(p_out_));
            double dual = 0.0;
            for (std::size_t j = 0; j < d.cols(); ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < d.rows(); ++i) s += d(i, j) * d(i, j);
                if (s == 0.0) continue;  // zero column stays zero
                const double nrm = std::sqrt(s);
                dual += root * nrm;
                for (std::size_t i = 0; i < d.rows(); ++i) out(i, j) = -root * d(i, j) / nrm;
            }
            return {std::move(out), dual};
        }
        case NormKind::RowNorm: {
            const double inv_root = 1.0 / std::sqrt(static_cast<double>(p_in_));
            double dual = 0.0;
            for (std::size_t i = 0; i < d.rows(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d.cols(); ++j) s += d(i, j) * d(i, j);
                if (s == 0.0) continue;  // zero row stays zero
                const double nrm = std::sqrt(s);
                dual += inv_root * nrm;
                for (std::size_t j = 0; j < d.cols(); ++j) out(i, j) = -inv_root * d(i, j) / nrm;
            }
            return {std::move(out), dual};
        }
        case NormKind::MahalanobisDiag: {
            double dual2 = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) dual2 += d[i] * d[i] / std::sqrt(mahal_h_[i]);
            const double dual = std::sqrt(dual2);
            for (std::size_t i = 0; i < d.size(); ++i)
                out[i] = -d[i] / (std::sqrt(mahal_h_[i]) * dual);
            return {std::move(out), dual};
        }
    }
    throw std::logic_error("geometry lmo: unreachable");
}

double Geometry::dual_norm(const Matrix& d) const { return lmo_with_dual(d).second; }

Matrix Geometry::lmo(const Matrix& d) const { return lmo_with_dual(d).first; }

Matrix Geometry::sharp(const Matrix& d) const {
    auto [direction, dual] = lmo_with_dual(d);
    direction *= -dual;
    return direction;
}

// --- product geometry --------------------------------------------------------

ProductGeometry::ProductGeometry(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::invalid_argument("product geometry: no blocks");
    for (const Block& b : blocks_)
        if (!(b.radius > 0.0)) throw std::invalid_argument("product geometry: radius must be positive");
}

void ProductGeometry::check_arity(std::span<const Matrix> x, const char* op) const {
    if (x.size() != blocks_.size())
        throw std::invalid_argument(std::string(op) + ": block count mismatch");
}

double ProductGeometry::norm(std::span<const Matrix> x) const {
    check_arity(x, "product norm");
    double best = 0.0;
    for (std::size_t l = 0; l < blocks_.size(); ++l)
        best = std::max(best, blocks_[l].geometry.norm(x[l]) / blocks_[l].radius);
    return best;
}

double ProductGeometry::dual_norm(std::span<const Matrix> d) const {
    check_arity(d, "product dual norm");
    double sum = 0.0;
    for (std::size_t l = 0; l < blocks_.size(); ++l)
        sum += blocks_[l].radius * blocks_[l].geometry.dual_norm(d[l]);
    return sum;
}

std::vector<Matrix> ProductGeometry::lmo(std::span<const Matrix> d) const {
    check_arity(d, "product lmo");
    std::vector<Matrix> out;
    out.reserve(blocks_.size());
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        Matrix block = blocks_[l].geometry.lmo(d[l]);
        block *= blocks_[l].radius;
        out.push_back(std::move(block));
    }
    return out;
}

}  // namespace normopt
