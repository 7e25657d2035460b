#include "normopt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace normopt {

// --- one-sided Jacobi SVD -------------------------------------------------

namespace {

// Jacobi on the columns of a (rows >= cols): right-rotations orthogonalize
// column pairs; v accumulates the rotations so a_in = a_out * v^T with a_out
// having orthogonal columns.
void jacobi_orthogonalize(Matrix& a, Matrix& v) {
    const std::size_t m = a.rows(), n = a.cols();
    // dot products of length m carry ~sqrt(m) eps of rounding noise, so the
    // rotation threshold must sit above that or near-orthogonal pairs cycle
    const double tol = std::max(1e-14, 4.0 * std::sqrt(static_cast<double>(m)) * 2.2e-16);
    constexpr std::size_t max_sweeps = 100;

    // Columns whose norm has collapsed to rounding noise relative to the
    // whole matrix carry no direction information; rotating them against
    // anything just chases that noise and never settles.
    double fro2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) fro2 += a[i] * a[i];
    const double dead2 = fro2 * 1e-28;

    std::size_t sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double dii = 0.0, djj = 0.0, dij = 0.0;
                for (std::size_t r = 0; r < m; ++r) {
                    const double ai = a(r, i), aj = a(r, j);
                    dii += ai * ai;
                    djj += aj * aj;
                    dij += ai * aj;
                }
                if (dii <= dead2 || djj <= dead2) continue;
                if (std::abs(dij) <= tol * std::sqrt(dii * djj)) continue;
                rotated = true;

                const double zeta = (djj - dii) / (2.0 * dij);
                const double t = std::copysign(1.0, zeta) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double ai = a(r, i), aj = a(r, j);
                    a(r, i) = cs * ai - sn * aj;
                    a(r, j) = sn * ai + cs * aj;
                }
                for (std::size_t r = 0; r < v.rows(); ++r) {
                    const double vi = v(r, i), vj = v(r, j);
                    v(r, i) = cs * vi - sn * vj;
                    v(r, j) = sn * vi + cs * vj;
                }
            }
        }
        if (!rotated) break;
    }
    if (sweep == max_sweeps) throw std::runtime_error("svd: Jacobi sweeps did not converge");
}

// Fills u columns flagged as rank-deficient with unit vectors orthogonal to
// the columns already present.
void complete_basis(Matrix& u, const std::vector<bool>& missing) {
    const std::size_t m = u.rows(), n = u.cols();
    for (std::size_t j = 0; j < n; ++j) {
        if (!missing[j]) continue;
        double best_norm = -1.0;
        std::vector<double> best(m, 0.0);
        for (std::size_t e = 0; e < m; ++e) {
            std::vector<double> cand(m, 0.0);
            cand[e] = 1.0;
            for (std::size_t c = 0; c < n; ++c) {
                if (missing[c] && c >= j) continue;  // later holes are still zero
                double proj = u(e, c);
                for (std::size_t r = 0; r < m; ++r) cand[r] -= proj * u(r, c);
            }
            double norm2 = 0.0;
            for (double x : cand) norm2 += x * x;
            if (norm2 > best_norm) {
                best_norm = norm2;
                best = cand;
            }
            if (best_norm > 0.5) break;  // plenty orthogonal already
        }
        const double inv = 1.0 / std::sqrt(best_norm);
        for (std::size_t r = 0; r < m; ++r) u(r, j) = best[r] * inv;
    }
}

}  // namespace

SvdResult svd(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
    if (!a.is_finite()) throw std::invalid_argument("svd: non-finite entries");

    if (a.rows() < a.cols()) {
        // decompose the transpose and swap the factors
        SvdResult t = svd(a.transpose());
        SvdResult out;
        out.u = t.vt.transpose();
        out.sigma = std::move(t.sigma);
        out.vt = t.u.transpose();
        return out;
    }

    const std::size_t m = a.rows(), n = a.cols();
    Matrix work = a;
    Matrix v = Matrix::identity(n);
    jacobi_orthogonalize(work, v);

    std::vector<double> sigma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < m; ++r) s += work(r, j) * work(r, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out;
    out.u = Matrix(m, n);
    out.vt = Matrix(n, n);
    out.sigma.resize(n);
    const double sigma_max = sigma[order[0]];
    double fro2 = 0.0;
    for (double s : sigma) fro2 += s * s;
    // Below this the column is rounding noise left over from a rank-deficient
    // input; its direction carries no information, so report an exact zero and
    // fill the column from the orthogonal complement instead.
    const double rank_tol = std::max(sigma_max * static_cast<double>(m) * 2.2e-16,
                                     std::sqrt(fro2) * 1e-14);
    std::vector<bool> missing(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.sigma[j] = sigma[src];
        if (sigma[src] <= rank_tol) {
            missing[j] = true;
            out.sigma[j] = 0.0;
        } else {
            const double inv = 1.0 / sigma[src];
            for (std::size_t r = 0; r < m; ++r) out.u(r, j) = work(r, src) * inv;
        }
        for (std::size_t r = 0; r < n; ++r) out.vt(j, r) = v(r, src);
    }
    if (std::any_of(missing.begin(), missing.end(), [](bool b) { return b; }))
        complete_basis(out.u, missing);
    return out;
}

// --- symmetric eigen / fractional powers -----------------------------------

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix; a becomes diagonal
// (eigenvalues), q accumulates the eigenvectors as columns.
void jacobi_eigen(Matrix& a, Matrix& q) {
    const std::size_t n = a.rows();
    q = Matrix::identity(n);
    constexpr std::size_t max_sweeps = 100;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale += a(i, j) * a(i, j);
    const double off_tol = 1e-28 * scale;  // (1e-14 * ||a||_F)^2

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
        if (off <= off_tol) return;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - s * akr;
                    a(k, r) = s * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), ark = a(r, k);
                    a(p, k) = c * apk - s * ark;
                    a(r, k) = s * apk + c * ark;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
    }
    throw std::runtime_error("sym_power: Jacobi eigensolver did not converge");
}

}  // namespace

Matrix sym_power(const Matrix& a, double p) {
    if (a.rows() != a.cols() || a.rows() == 0)
        throw std::invalid_argument("sym_power: matrix must be square and nonempty");
    if (!a.is_finite()) throw std::invalid_argument("sym_power: non-finite entries");
    const std::size_t n = a.rows();
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
    if (asym > 1e-8 * std::max(1.0, a.max_abs()))
        throw std::invalid_argument("sym_power: matrix is not symmetric");

    // work on the symmetrized copy so rounding in the caller cannot bias pairs
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w(i, j) = 0.5 * (a(i, j) + a(j, i));

    Matrix q;
    jacobi_eigen(w, q);
    std::vector<double> lam(n);
    double lam_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lam[i] = w(i, i);
        lam_max = std::max(lam_max, std::abs(lam[i]));
    }
    const double neg_tol = std::max(1e-10, 1e-14 * lam_max);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    const double delta = (p < 0.0) ? 1e-12 * trace / static_cast<double>(n) : 0.0;

    std::vector<double> powed(n);
    for (std::size_t i = 0; i < n; ++i) {
        double l = lam[i];
        if (l < -neg_tol) throw std::invalid_argument("sym_power: negative eigenvalue");
        l = std::max(l, 0.0);
        if (p < 0.0) {
            l += delta;
            if (l <= 0.0) throw std::invalid_argument("sym_power: singular matrix, negative power");
        }
        powed[i] = std::pow(l, p);
    }

    // q * diag(powed) * q^T, symmetrized on the way out
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += q(i, k) * powed[k] * q(j, k);
            out(i, j) = s;
            out(j, i) = s;
        }
    return out;
}

// --- Newton-Schulz polar factor ---------------------------------------------

Matrix newton_schulz_polar(const Matrix& a, std::size_t iters, double eps) {
    if (a.rows() == 0 || a.cols() == 0)
        throw std::invalid_argument("newton_schulz_polar: empty matrix");
    if (!a.is_finite()) throw std::invalid_argument("newton_schulz_polar: non-finite entries");
    if (a.frobenius_norm() == 0.0)
        throw std::invalid_argument("newton_schulz_polar: zero matrix");

    Matrix x = a;
    const bool gram_left = x.rows() <= x.cols();  // use the smaller Gram factor

    // Scale by the Gershgorin bound on the Gram's top eigenvalue. It never
    // falls below sigma_max^2, so the spectrum lands inside the cubic
    // iteration's convergence region, and it is exact for orthogonal input
    // (Gram = identity), which the iteration then fixes from step one.
    Matrix gram0 = gram_left ? matmul_a_bt(x, x) : matmul_at_b(x, x);
    double bound = 0.0;
    for (std::size_t i = 0; i < gram0.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < gram0.cols(); ++j) row += std::abs(gram0(i, j));
        bound = std::max(bound, row);
    }
    x *= 1.0 / std::sqrt(bound);
    for (std::size_t t = 0; t < iters; ++t) {
        Matrix cubic;
        if (gram_left) {
            cubic = matmul(matmul_a_bt(x, x), x);  // (x x^T) x
        } else {
            cubic = matmul(x, matmul_at_b(x, x));  // x (x^T x)
        }
        cubic.scale_add(-0.5, x, 1.5);  // 1.5 x - 0.5 x x^T x
        if (eps > 0.0) {
            Matrix diff = cubic;
            diff -= x;
            if (diff.frobenius_norm() <= eps) {
                x = std::move(cubic);
                break;
            }
        }
        x = std::move(cubic);
    }
    return x;
}

}  // namespace normopt
