#pragma once

#include <span>
#include <string>
#include <vector>

#include "normopt/matrix.hpp"

namespace normopt {

// Which norm a parameter block lives in. The RMS-scaled kinds carry the
// (p_out, p_in) shape so their dimension factors are fixed at construction,
// never inferred from the data they are applied to.
enum class NormKind {
    EuclideanL2,      // Frobenius
    MaxNormSign,      // max |w_ij|, the sign geometry
    SpectralRms,      // sqrt(p_in/p_out) * sigma_max
    SpectralPlain,    // sigma_max
    ColNorm,          // max_j (1/sqrt(p_out)) ||col_j||_2
    RowNorm,          // max_i sqrt(p_in) ||row_i||_2
    MahalanobisDiag,  // sqrt(sum_i h_i^{1/2} w_i^2) for a stored diagonal h
};

enum class SpectralBackend {
    Exact,         // Jacobi SVD
    NewtonSchulz,  // cubic polar iteration
};

// A norm together with the operators an optimizer needs from it: the norm
// itself, its dual, the linear minimization oracle over the unit ball, and
// the sharp operator. The three satisfy, for every d:
//   <d, lmo(d)> = -dual_norm(d),  norm(lmo(d)) = 1 for d != 0,
//   sharp(d) = -dual_norm(d) * lmo(d).
class Geometry {
public:
    static Geometry l2();
    static Geometry sign();
    static Geometry spectral_rms(std::size_t p_out, std::size_t p_in);
    static Geometry spectral(std::size_t p_out, std::size_t p_in);
    static Geometry colnorm(std::size_t p_out, std::size_t p_in);
    static Geometry rownorm(std::size_t p_out, std::size_t p_in);
    // h holds the positive diagonal, laid out like the parameter block
    static Geometry mahalanobis_diag(Matrix h);

    // Config-string factory: "l2", "sign", "spectral_rms", "spectral",
    // "colnorm", "rownorm", "mahalanobis_diag" (unit diagonal).
    static Geometry parse(const std::string& kind, std::size_t p_out, std::size_t p_in);

    NormKind kind() const { return kind_; }
    std::size_t p_out() const { return p_out_; }
    std::size_t p_in() const { return p_in_; }

    // Spectral kinds only: picks how u v^T is produced. The exact backend
    // also reads the dual norm off the singular values; the Newton-Schulz
    // backend recovers it as -<d, lmo(d)> so the duality identity holds by
    // construction for both.
    void set_spectral_backend(SpectralBackend backend, std::size_t ns_iters = 10);
    SpectralBackend spectral_backend() const { return backend_; }

    double norm(const Matrix& w) const;
    double dual_norm(const Matrix& d) const;
    Matrix lmo(const Matrix& d) const;    // unit-radius; lmo(0) = 0
    Matrix sharp(const Matrix& d) const;  // -dual_norm(d) * lmo(d)
    // both at once, from a single factorization for the spectral kinds
    std::pair<Matrix, double> lmo_with_dual(const Matrix& d) const;

private:
    Geometry(NormKind kind, std::size_t p_out, std::size_t p_in) noexcept
        : kind_(kind), p_out_(p_out), p_in_(p_in) {}

    void check_shape(const Matrix& m, const char* op) const;

    NormKind kind_;
    std::size_t p_out_ = 0;
    std::size_t p_in_ = 0;
    Matrix mahal_h_;
    SpectralBackend backend_ = SpectralBackend::Exact;
    std::size_t ns_iters_ = 10;
};

// Finite product of per-block geometries under the max norm
//   |||x||| = max_l norm_l(x_l) / rho_l,
// whose lmo splits blockwise into rho_l * lmo_l and whose dual norm is the
// weighted sum sum_l rho_l * dual_l(d_l).
class ProductGeometry {
public:
    struct Block {
        Geometry geometry;
        double radius;  // rho_l > 0
    };

    ProductGeometry() = default;
    explicit ProductGeometry(std::vector<Block> blocks);

    std::size_t size() const { return blocks_.size(); }
    const Block& block(std::size_t i) const { return blocks_[i]; }

    double norm(std::span<const Matrix> x) const;
    double dual_norm(std::span<const Matrix> d) const;
    std::vector<Matrix> lmo(std::span<const Matrix> d) const;

private:
    void check_arity(std::span<const Matrix> x, const char* op) const;
    std::vector<Block> blocks_;
};

}  // namespace normopt
