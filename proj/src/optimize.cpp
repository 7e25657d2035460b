#include "normopt/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace normopt {

Method parse_method(const std::string& text) {
    if (text == "presgdw") return Method::PreSgdW;
    if (text == "steepest") return Method::SteepestDescent;
    if (text == "uscg") return Method::Uscg;
    if (text == "scg") return Method::Scg;
    throw std::invalid_argument("optimizer: unknown method '" + text + "'");
}

void validate(const OptimizerConfig& cfg) {
    if (!(cfg.eps >= 0.0)) throw std::invalid_argument("optimizer: eps must be nonnegative");
    switch (cfg.method) {
        case Method::PreSgdW:
        case Method::SteepestDescent:
        case Method::Uscg:
            if (!(cfg.gamma > 0.0)) throw std::invalid_argument("optimizer: gamma must be positive");
            if (cfg.lambda < 0.0) throw std::invalid_argument("optimizer: lambda must be nonnegative");
            break;
        case Method::Scg:
            if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0))
                throw std::invalid_argument("optimizer: scg needs lambda in (0, 1]");
            break;
    }
}

static double gamma_at(const ParamGroup& group, const OptimizerConfig& cfg, std::size_t k) {
    return cfg.schedule.value(k) * cfg.gamma * group.lr_scale;
}

void step_presgdw(ParamGroup& group, const OptimizerConfig& cfg, Preconditioner& pre,
                  const Matrix& d, std::size_t k) {
    const double s = cfg.schedule.value(k);
    const double gamma_k = s * cfg.gamma * group.lr_scale;
    const double lambda_k = s * cfg.lambda;
    const Matrix update = pre.apply_inverse_sqrt(d, cfg.eps);
    group.weight.scale_add(1.0 - lambda_k, update, -gamma_k);
}

void step_steepest(ParamGroup& group, const OptimizerConfig& cfg, const Matrix& d, std::size_t k) {
    group.weight.add_scaled(group.geometry.sharp(d), -gamma_at(group, cfg, k));
}

void step_uscg(ParamGroup& group, const OptimizerConfig& cfg, const Matrix& d, std::size_t k) {
    const double rho = group.radius > 0.0 ? group.radius : 1.0;
    group.weight.add_scaled(group.geometry.lmo(d), gamma_at(group, cfg, k) * rho);
}

void step_scg(ParamGroup& group, const OptimizerConfig& cfg, const Matrix& d, std::size_t k) {
    const double lambda_k = cfg.schedule.value(k) * cfg.lambda;
    if (!(lambda_k >= 0.0 && lambda_k <= 1.0))
        throw std::invalid_argument("optimizer: scg mixing weight left [0, 1]");
    double rho = group.radius;
    if (rho <= 0.0) {
        if (!(cfg.lambda > 0.0))
            throw std::invalid_argument("optimizer: scg cannot derive a radius with lambda = 0");
        rho = cfg.gamma / cfg.lambda;
    }
    if (!(rho > 0.0)) throw std::invalid_argument("optimizer: scg needs a positive radius");
    group.weight.scale_add(1.0 - lambda_k, group.geometry.lmo(d), lambda_k * rho);
}

void network_step(std::vector<ParamGroup>& groups, const OptimizerConfig& cfg,
                  std::span<const Matrix> d, std::span<Preconditioner> pre, std::size_t k) {
    if (d.size() != groups.size())
        throw std::invalid_argument("network step: direction count mismatch");
    switch (cfg.method) {
        case Method::PreSgdW: {
            if (pre.size() != groups.size())
                throw std::invalid_argument("network step: preconditioner count mismatch");
            for (std::size_t l = 0; l < groups.size(); ++l)
                step_presgdw(groups[l], cfg, pre[l], d[l], k);
            return;
        }
        case Method::SteepestDescent: {
            // product-geometry sharp: one global dual norm scales every block
            std::vector<Matrix> lmos(groups.size());
            double global_dual = 0.0;
            for (std::size_t l = 0; l < groups.size(); ++l) {
                const double rho = groups[l].radius > 0.0 ? groups[l].radius : 1.0;
                auto [direction, dual] = groups[l].geometry.lmo_with_dual(d[l]);
                direction *= rho;
                lmos[l] = std::move(direction);
                global_dual += rho * dual;
            }
            for (std::size_t l = 0; l < groups.size(); ++l)
                groups[l].weight.add_scaled(lmos[l], gamma_at(groups[l], cfg, k) * global_dual);
            return;
        }
        case Method::Uscg:
            for (std::size_t l = 0; l < groups.size(); ++l) step_uscg(groups[l], cfg, d[l], k);
            return;
        case Method::Scg:
            for (std::size_t l = 0; l < groups.size(); ++l) step_scg(groups[l], cfg, d[l], k);
            return;
    }
    throw std::logic_error("network step: unreachable");
}

ScgParams scg_from_pytorch(double lr, double weight_decay) {
    if (!(weight_decay > 0.0))
        throw std::invalid_argument("scg_from_pytorch: weight decay must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("scg_from_pytorch: lr must be positive");
    return {lr * weight_decay, 1.0 / weight_decay};
}

}  // namespace normopt
