#pragma once

#include <vector>

#include "normopt/matrix.hpp"

namespace normopt {

// Thin SVD a = u * diag(sigma) * vt with r = min(rows, cols) columns/rows and
// sigma sorted descending.
struct SvdResult {
    Matrix u;                   // rows x r, orthonormal columns
    std::vector<double> sigma;  // length r, nonnegative, descending
    Matrix vt;                  // r x cols, orthonormal rows
};

// Exact decomposition via one-sided Jacobi rotations. Serves as the precision
// reference everywhere a spectral quantity is tested.
SvdResult svd(const Matrix& a);

// q * diag(lambda^p) * q^T for symmetric positive semidefinite a. Negative
// exponents add damping delta = 1e-12 * trace(a) / dim before inversion.
Matrix sym_power(const Matrix& a, double p);

// Orthogonal polar factor of a (the u * v^T of its SVD) by the cubic
// iteration x <- 1.5 x - 0.5 x x^T x, pre-normalized by the Frobenius norm so
// the whole spectrum starts inside the convergence region (0, sqrt(3)).
// Runs at most `iters` rounds; stops early once the iterate moves less than
// `eps` in Frobenius norm (eps = 0 disables the early exit). Zero input is
// rejected; rank-deficient input converges on the nonzero subspace and keeps
// zero singular values at zero.
Matrix newton_schulz_polar(const Matrix& a, std::size_t iters, double eps);

}  // namespace normopt
