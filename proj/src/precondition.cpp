#include "normopt/precondition.hpp"

#include <cmath>
#include <stdexcept>

#include "normopt/linalg.hpp"

namespace normopt {

PrecondKind parse_precond_kind(const std::string& text) {
    if (text == "identity") return PrecondKind::Identity;
    if (text == "adagrad_diag") return PrecondKind::AdaGradDiag;
    if (text == "adagrad_full") return PrecondKind::AdaGradFull;
    if (text == "rmsprop") return PrecondKind::RmsProp;
    if (text == "adam") return PrecondKind::Adam;
    if (text == "ssd_inf") return PrecondKind::SsdInf;
    if (text == "shampoo") return PrecondKind::Shampoo;
    if (text == "ssd_spectral") return PrecondKind::SsdSpectral;
    throw std::invalid_argument("preconditioner: unknown kind '" + text + "'");
}

static void check_beta2(double beta2) {
    if (!(beta2 >= 0.0 && beta2 <= 1.0))
        throw std::invalid_argument("preconditioner: beta2 must lie in [0, 1]");
}

Preconditioner Preconditioner::identity() { return Preconditioner(PrecondKind::Identity); }

Preconditioner Preconditioner::adagrad_diag() { return Preconditioner(PrecondKind::AdaGradDiag); }

Preconditioner Preconditioner::adagrad_full() { return Preconditioner(PrecondKind::AdaGradFull); }

Preconditioner Preconditioner::rmsprop(double beta2) {
    check_beta2(beta2);
    Preconditioner p(PrecondKind::RmsProp);
    p.beta2_ = beta2;
    return p;
}

Preconditioner Preconditioner::adam(double beta2) {
    check_beta2(beta2);
    Preconditioner p(PrecondKind::Adam);
    p.beta2_ = beta2;
    return p;
}

Preconditioner Preconditioner::ssd_inf() { return Preconditioner(PrecondKind::SsdInf); }

Preconditioner Preconditioner::shampoo(double beta2) {
    check_beta2(beta2);
    Preconditioner p(PrecondKind::Shampoo);
    p.beta2_ = beta2;
    return p;
}

Preconditioner Preconditioner::ssd_spectral(KroneckerSide side) {
    Preconditioner p(PrecondKind::SsdSpectral);
    p.side_ = side;
    return p;
}

Preconditioner Preconditioner::make(PrecondKind kind, double beta2, KroneckerSide side) {
    switch (kind) {
        case PrecondKind::Identity:
            return identity();
        case PrecondKind::AdaGradDiag:
            return adagrad_diag();
        case PrecondKind::AdaGradFull:
            return adagrad_full();
        case PrecondKind::RmsProp:
            return rmsprop(beta2);
        case PrecondKind::Adam:
            return adam(beta2);
        case PrecondKind::SsdInf:
            return ssd_inf();
        case PrecondKind::Shampoo:
            return shampoo(beta2);
        case PrecondKind::SsdSpectral:
            return ssd_spectral(side);
    }
    throw std::logic_error("preconditioner: unreachable");
}

void Preconditioner::update(const Matrix& g) {
    if (!g.is_finite()) throw std::invalid_argument("preconditioner: non-finite gradient");
    switch (kind_) {
        case PrecondKind::Identity:
            break;
        case PrecondKind::AdaGradDiag: {
            if (!primed_) diag_ = Matrix(g.rows(), g.cols());
            if (!diag_.same_shape(g))
                throw std::invalid_argument("preconditioner: gradient shape changed");
            for (std::size_t i = 0; i < g.size(); ++i) diag_[i] += g[i] * g[i];
            break;
        }
        case PrecondKind::AdaGradFull: {
            const std::size_t n = g.size();
            if (!primed_) full_ = Matrix(n, n);
            if (full_.rows() != n)
                throw std::invalid_argument("preconditioner: gradient shape changed");
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) full_(i, j) += g[i] * g[j];
            break;
        }
        case PrecondKind::RmsProp:
        case PrecondKind::Adam: {
            if (!primed_) {
                diag_ = hadamard(g, g);  // v^0 = g^0 . g^0
                break;
            }
            if (!diag_.same_shape(g))
                throw std::invalid_argument("preconditioner: gradient shape changed");
            for (std::size_t i = 0; i < g.size(); ++i)
                diag_[i] = beta2_ * diag_[i] + (1.0 - beta2_) * g[i] * g[i];
            break;
        }
        case PrecondKind::SsdInf:
            diag_ = hadamard(g, g);
            break;
        case PrecondKind::Shampoo: {
            Matrix ggt = matmul_a_bt(g, g);
            Matrix gtg = matmul_at_b(g, g);
            if (!primed_) {
                gram_out_ = std::move(ggt);
                gram_in_ = std::move(gtg);
                break;
            }
            if (!gram_out_.same_shape(ggt))
                throw std::invalid_argument("preconditioner: gradient shape changed");
            gram_out_.scale_add(beta2_, ggt, 1.0 - beta2_);
            gram_in_.scale_add(beta2_, gtg, 1.0 - beta2_);
            break;
        }
        case PrecondKind::SsdSpectral:
            gram_out_ = matmul_a_bt(g, g);
            gram_in_ = matmul_at_b(g, g);
            break;
    }
    primed_ = true;
}

Matrix Preconditioner::apply_inverse_sqrt(const Matrix& d, double eps) const {
    if (eps < 0.0) throw std::invalid_argument("preconditioner: negative eps");
    if (!primed_ && kind_ != PrecondKind::Identity)
        throw std::logic_error("preconditioner: apply before first update");
    const double ridge = eps * eps;
    switch (kind_) {
        case PrecondKind::Identity:
            return d;
        case PrecondKind::AdaGradDiag:
        case PrecondKind::RmsProp:
        case PrecondKind::Adam:
        case PrecondKind::SsdInf: {
            Matrix out = d;
            if (!diag_.same_shape(d))
                throw std::invalid_argument("preconditioner: direction shape mismatch");
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double h = diag_[i] + ridge;
                if (h == 0.0)
                    throw std::invalid_argument("preconditioner: singular state with eps = 0");
                out[i] = d[i] / std::sqrt(h);
            }
            return out;
        }
        case PrecondKind::AdaGradFull: {
            const std::size_t n = d.size();
            Matrix h = full_;
            if (h.rows() != n)
                throw std::invalid_argument("preconditioner: direction shape mismatch");
            for (std::size_t i = 0; i < n; ++i) h(i, i) += ridge;
            const Matrix inv = sym_power(h, -0.5);
            Matrix flat(n, 1);
            for (std::size_t i = 0; i < n; ++i) flat[i] = d[i];
            const Matrix res = matmul(inv, flat);
            Matrix out(d.rows(), d.cols());
            for (std::size_t i = 0; i < n; ++i) out[i] = res[i];
            return out;
        }
        case PrecondKind::Shampoo:
        case PrecondKind::SsdSpectral: {
            Matrix r = gram_out_;
            Matrix l = gram_in_;
            if (r.rows() != d.rows() || l.rows() != d.cols())
                throw std::invalid_argument("preconditioner: direction shape mismatch");
            for (std::size_t i = 0; i < r.rows(); ++i) r(i, i) += ridge;
            for (std::size_t i = 0; i < l.rows(); ++i) l(i, i) += ridge;
            const KroneckerSide side = kind_ == PrecondKind::Shampoo ? KroneckerSide::Both : side_;
            switch (side) {
                case KroneckerSide::Left:
                    return matmul(sym_power(r, -0.5), d);
                case KroneckerSide::Right:
                    return matmul(d, sym_power(l, -0.5));
                case KroneckerSide::Both:
                    return matmul(sym_power(r, -0.25), matmul(d, sym_power(l, -0.25)));
            }
            throw std::logic_error("preconditioner: unreachable");
        }
    }
    throw std::logic_error("preconditioner: unreachable");
}

}  // namespace normopt
