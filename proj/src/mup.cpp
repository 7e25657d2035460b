#include "normopt/mup.hpp"

#include <cmath>
#include <stdexcept>

#include "normopt/linalg.hpp"

namespace normopt {

double AbcParam::weight_scale(std::size_t l) const {
    return std::pow(static_cast<double>(width), -a.at(l));
}

double AbcParam::init_std(std::size_t l) const {
    return std::sqrt(base_var.at(l)) * std::pow(static_cast<double>(width), -b.at(l));
}

double AbcParam::lr_scale(std::size_t l) const {
    return std::pow(static_cast<double>(width), -c.at(l));
}

double AbcParam::lr(std::size_t l) const { return eta * lr_scale(l); }

static AbcParam base_param(std::size_t hidden_layers, std::size_t width, std::size_t in_dim,
                           std::size_t out_dim, double eta) {
    if (hidden_layers == 0) throw std::invalid_argument("abc: need at least one hidden layer");
    if (width == 0 || in_dim == 0 || out_dim == 0)
        throw std::invalid_argument("abc: dimensions must be positive");
    if (!(eta > 0.0)) throw std::invalid_argument("abc: eta must be positive");
    AbcParam p;
    p.hidden_layers = hidden_layers;
    p.width = width;
    p.in_dim = in_dim;
    p.out_dim = out_dim;
    p.eta = eta;
    const std::size_t n = hidden_layers + 1;
    p.a.assign(n, 0.0);
    p.b.assign(n, 0.5);
    p.c.assign(n, 0.0);
    p.base_var.assign(n, 1.0);
    p.b[0] = 0.0;
    p.base_var[0] = 1.0 / static_cast<double>(in_dim);
    return p;
}

AbcParam make_sp(std::size_t hidden_layers, std::size_t width, std::size_t in_dim,
                 std::size_t out_dim, double eta) {
    return base_param(hidden_layers, width, in_dim, out_dim, eta);
}

AbcParam make_mup(std::size_t hidden_layers, std::size_t width, std::size_t in_dim,
                  std::size_t out_dim, double eta) {
    AbcParam p = base_param(hidden_layers, width, in_dim, out_dim, eta);
    const std::size_t last = p.num_layers() - 1;
    p.b[last] = 1.0;
    p.c[0] = -1.0;
    p.c[last] = 1.0;
    return p;
}

AbcParam shift_symmetry(const AbcParam& base, double alpha) {
    AbcParam p = base;
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
        p.a[l] += alpha;
        p.b[l] -= alpha;
        p.c[l] -= 2.0 * alpha;
    }
    return p;
}

std::vector<double> spectral_radii(std::span<const std::size_t> dims, double rho) {
    if (dims.size() < 2) throw std::invalid_argument("spectral radii: need at least one transition");
    if (!(rho > 0.0)) throw std::invalid_argument("spectral radii: rho must be positive");
    std::vector<double> out;
    out.reserve(dims.size() - 1);
    for (std::size_t l = 1; l < dims.size(); ++l) {
        if (dims[l] == 0 || dims[l - 1] == 0)
            throw std::invalid_argument("spectral radii: dimensions must be positive");
        out.push_back(rho * std::sqrt(static_cast<double>(dims[l]) /
                                      static_cast<double>(dims[l - 1])));
    }
    return out;
}

double spectral_init_var(std::size_t p_out, std::size_t p_in) {
    if (p_out == 0 || p_in == 0)
        throw std::invalid_argument("spectral init: dimensions must be positive");
    const double ratio = static_cast<double>(p_out) / static_cast<double>(p_in);
    return (1.0 / static_cast<double>(p_in)) * std::min(1.0, ratio);
}

std::size_t grad_rank(const Matrix& g, double tol) {
    if (g.empty()) throw std::invalid_argument("grad rank: empty matrix");
    if (!(tol >= 0.0)) throw std::invalid_argument("grad rank: negative tolerance");
    if (g.frobenius_norm() == 0.0) return 0;
    const SvdResult f = svd(g);
    const double cutoff = tol * f.sigma[0];
    std::size_t rank = 0;
    for (double s : f.sigma)
        if (s > cutoff) ++rank;
    return rank;
}

}  // namespace normopt
