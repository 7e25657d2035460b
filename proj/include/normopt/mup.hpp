#pragma once

#include <span>
#include <vector>

#include "normopt/matrix.hpp"

namespace normopt {

// Width-scaling exponents (a_l, b_l, c_l) for an MLP with `hidden_layers`
// hidden layers, so hidden_layers + 1 weight matrices indexed 0..L. Layer l
// realizes
//   effective weight  p^{-a_l} w_l,
//   init              w_l ~ N(0, base_var_l * p^{-2 b_l}),
//   stepsize          eta * p^{-c_l},
// where p is the hidden width. base_var keeps the width-independent
// constants (the first layer's 1/in_dim) out of the exponents.
struct AbcParam {
    std::size_t hidden_layers = 1;
    std::size_t width = 1;
    std::size_t in_dim = 1;
    std::size_t out_dim = 1;
    double eta = 1.0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> base_var;

    std::size_t num_layers() const { return hidden_layers + 1; }
    double weight_scale(std::size_t l) const;  // p^{-a_l}
    double init_std(std::size_t l) const;      // sqrt(base_var_l) * p^{-b_l}
    double lr_scale(std::size_t l) const;      // p^{-c_l}
    double lr(std::size_t l) const;            // eta * p^{-c_l}
};

// Standard parameterization: a = 0; b_0 = 0 and b_l = 1/2 past the first
// layer; c = 0 (one global stepsize). Realized inits: first layer
// N(0, 1/in_dim), every later layer N(0, 1/p).
AbcParam make_sp(std::size_t hidden_layers, std::size_t width, std::size_t in_dim,
                 std::size_t out_dim, double eta);

// Maximal-update variant: like SP except the output layer initializes at
// N(0, 1/p^2) (b_L = 1) and the stepsizes tilt to eta * p for the first
// layer (c_0 = -1) and eta / p for the output layer (c_L = 1).
AbcParam make_mup(std::size_t hidden_layers, std::size_t width, std::size_t in_dim,
                  std::size_t out_dim, double eta);

// The reparameterization (a + alpha, b - alpha, c - 2 alpha) that leaves the
// trained network function invariant at every step.
AbcParam shift_symmetry(const AbcParam& base, double alpha);

// Per-transition radii rho_l = rho * sqrt(p_l / p_{l-1}) for the dimension
// chain (p_0, ..., p_{L+1}); square hidden layers get rho, a narrow output
// layer shrinks with width.
std::vector<double> spectral_radii(std::span<const std::size_t> dims, double rho);

// Init variance (1/p_in) * min(1, p_out/p_in), which puts the layer's
// input-output gain at Theta(1) for any aspect ratio.
double spectral_init_var(std::size_t p_out, std::size_t p_in);

// Number of singular values above tol * sigma_max; zero matrix has rank 0.
std::size_t grad_rank(const Matrix& g, double tol = 1e-9);

}  // namespace normopt
