#pragma once

#include <string>

#include "normopt/matrix.hpp"

namespace normopt {

// Second-moment state shapes. The diagonal kinds store one entry per
// coordinate; AdaGradFull keeps the dense matrix over the flattened
// parameter; the Kronecker kinds keep the two Gram factors of the
// matrix-shaped gradient.
enum class PrecondKind {
    Identity,
    AdaGradDiag,  // H += g . g
    AdaGradFull,  // H += vec(g) vec(g)^T
    RmsProp,      // H <- b2 H + (1 - b2) g . g
    Adam,         // same state as RmsProp; paired with momentum upstream
    SsdInf,       // H = g . g each step
    Shampoo,      // EMA Gram factors g g^T and g^T g
    SsdSpectral,  // fresh Gram factors each step
};

// Which side of the update the Kronecker factors touch. All three choices
// produce the polar factor u v^T on a fresh gradient; they differ only in
// how the two factors split the work.
enum class KroneckerSide { Left, Right, Both };

PrecondKind parse_precond_kind(const std::string& text);

class Preconditioner {
public:
    static Preconditioner identity();
    static Preconditioner adagrad_diag();
    static Preconditioner adagrad_full();
    static Preconditioner rmsprop(double beta2);
    static Preconditioner adam(double beta2);
    static Preconditioner ssd_inf();
    static Preconditioner shampoo(double beta2);
    static Preconditioner ssd_spectral(KroneckerSide side = KroneckerSide::Both);
    static Preconditioner make(PrecondKind kind, double beta2,
                               KroneckerSide side = KroneckerSide::Both);

    PrecondKind kind() const { return kind_; }

    // folds gradient g^k into the state; EMA buffers initialize to the first
    // observation (no bias correction)
    void update(const Matrix& g);

    // H^{-1/2} d with the ridge eps^2 added under the root:
    //   diagonal   d_i / sqrt(H_ii + eps^2)
    //   full       (H + eps^2 I)^{-1/2} d
    //   Shampoo    (g g^T EMA + eps^2 I)^{-1/4}  D  (g^T g EMA + eps^2 I)^{-1/4}
    //   SsdSpec    half powers on the chosen single side, quarter powers on both
    // A singular state with eps = 0 is rejected.
    Matrix apply_inverse_sqrt(const Matrix& d, double eps) const;

    // state accessors for verification
    const Matrix& diag_state() const { return diag_; }
    const Matrix& full_state() const { return full_; }
    const Matrix& gram_out() const { return gram_out_; }  // accumulates g g^T
    const Matrix& gram_in() const { return gram_in_; }    // accumulates g^T g
    bool primed() const { return primed_; }

private:
    explicit Preconditioner(PrecondKind kind) : kind_(kind) {}

    PrecondKind kind_;
    double beta2_ = 0.0;
    KroneckerSide side_ = KroneckerSide::Both;
    Matrix diag_;
    Matrix full_;
    Matrix gram_out_;
    Matrix gram_in_;
    bool primed_ = false;
};

}  // namespace normopt
