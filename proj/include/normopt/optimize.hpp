#pragma once

#include <span>
#include <string>
#include <vector>

#include "normopt/feedback.hpp"
#include "normopt/geometry.hpp"
#include "normopt/matrix.hpp"
#include "normopt/precondition.hpp"
#include "normopt/schedule.hpp"

namespace normopt {

// One trainable block: the weight plus the geometry it is measured in.
struct ParamGroup {
    Matrix weight;
    Geometry geometry = Geometry::l2();
    double radius = 0.0;    // rho_l; 0 means unset (unit for lmo steps, gamma/lambda for Scg)
    double lr_scale = 1.0;  // layerwise gamma multiplier (the p^{-c_l} of a parameterization)
    std::string name;
};

// The four step rules. Every rule reads the shared stepsize multiplier s_k
// and uses gamma_k = s_k * gamma * lr_scale, lambda_k = s_k * lambda.
enum class Method { PreSgdW, SteepestDescent, Uscg, Scg };

Method parse_method(const std::string& text);

struct OptimizerConfig {
    Method method = Method::PreSgdW;
    double gamma = 0.1;
    double lambda = 0.0;
    Schedule schedule = Schedule::constant();
    FeedbackKind feedback = FeedbackKind::Plain;
    AlphaSchedule alpha = AlphaSchedule::constant(0.1);
    AlphaSchedule beta = AlphaSchedule::constant(0.9);  // Lion's emit weight
    PrecondKind precond = PrecondKind::Identity;        // PreSgdW only
    double beta2 = 0.99;
    double eps = 1e-8;
};

// rejects combinations no step rule accepts (bad gamma/lambda ranges)
void validate(const OptimizerConfig& cfg);

// Decoupled-decay preconditioned step: w <- (1 - lambda_k) w - gamma_k H^{-1/2} d.
void step_presgdw(ParamGroup& group, const OptimizerConfig& cfg, Preconditioner& pre,
                  const Matrix& d, std::size_t k);

// w <- w - gamma_k [d]^sharp in the group's own geometry.
void step_steepest(ParamGroup& group, const OptimizerConfig& cfg, const Matrix& d, std::size_t k);

// w <- w + gamma_k rho lmo(d); unset radius means the unit ball.
void step_uscg(ParamGroup& group, const OptimizerConfig& cfg, const Matrix& d, std::size_t k);

// w <- (1 - lambda_k) w + lambda_k rho lmo(d); keeps the iterate inside the
// rho-ball whenever it starts there. lambda_k outside [0, 1] is rejected.
void step_scg(ParamGroup& group, const OptimizerConfig& cfg, const Matrix& d, std::size_t k);

// Applies the configured rule across all groups with one shared s_k. For
// SteepestDescent the blocks form a product geometry, so a single global
// scale (the product dual norm, sum_l rho_l dual_l) replaces the per-block
// dual norms. `pre` supplies one preconditioner per group for PreSgdW and is
// ignored otherwise.
void network_step(std::vector<ParamGroup>& groups, const OptimizerConfig& cfg,
                  std::span<const Matrix> d, std::span<Preconditioner> pre, std::size_t k);

// Constrained view of the PyTorch stepsize/decay pair:
//   x <- (1 - lr wd) x + lr lmo(d)  is Scg with lambda = lr * wd, rho = 1 / wd.
struct ScgParams {
    double lambda;
    double rho;
};
ScgParams scg_from_pytorch(double lr, double weight_decay);

}  // namespace normopt
