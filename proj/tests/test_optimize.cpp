#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "normopt/feedback.hpp"
#include "normopt/linalg.hpp"
#include "normopt/matrix.hpp"
#include "normopt/optimize.hpp"
#include "normopt/precondition.hpp"
#include "normopt/rng.hpp"
#include "test_util.hpp"

using namespace normopt;
using testutil::frob_dist;

namespace {

ParamGroup scalar_group(double w) {
    ParamGroup g;
    g.weight = Matrix{{w}};
    g.geometry = Geometry::l2();
    return g;
}

}  // namespace

TEST_CASE("method names parse from config strings") {
    CHECK(parse_method("presgdw") == Method::PreSgdW);
    CHECK(parse_method("steepest") == Method::SteepestDescent);
    CHECK(parse_method("uscg") == Method::Uscg);
    CHECK(parse_method("scg") == Method::Scg);
    CHECK_THROWS_AS(parse_method("adamw"), std::invalid_argument);
}

TEST_CASE("validate rejects inconsistent configs") {
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.lambda = 0.5;
    validate(cfg);

    cfg.method = Method::Uscg;
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.gamma = -1.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("presgdw with identity preconditioner is sgd") {
    ParamGroup g = scalar_group(1.0);
    OptimizerConfig cfg;
    cfg.method = Method::PreSgdW;
    cfg.gamma = 0.1;
    cfg.lambda = 0.0;
    Preconditioner pre = Preconditioner::identity();
    Matrix grad{{1.0}};
    pre.update(grad);
    step_presgdw(g, cfg, pre, grad, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(0.9));
}

TEST_CASE("presgdw applies decay and the preconditioned direction") {
    // scalar AdamW arithmetic: (1-0.1)*1 - 0.1*(1/sqrt(1)) = 0.8
    ParamGroup g = scalar_group(1.0);
    OptimizerConfig cfg;
    cfg.method = Method::PreSgdW;
    cfg.gamma = 0.1;
    cfg.lambda = 0.1;
    cfg.eps = 0.0;
    Preconditioner pre = Preconditioner::adam(0.0);
    Matrix grad{{1.0}};
    pre.update(grad);
    step_presgdw(g, cfg, pre, grad, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("two adamw steps match a straight-line reference") {
    // beta1 = 0.9 means momentum alpha = 0.1; v0 = g0^2, d0 = g0.
    const double beta1 = 0.9, beta2 = 0.99, gamma = 0.1, lambda = 0.01, eps = 1e-8;
    const double g0 = 1.0, g1 = 1.0;

    double w_ref = 1.0;
    double d_ref = g0;
    double v_ref = g0 * g0;
    w_ref = (1.0 - lambda) * w_ref - gamma * d_ref / std::sqrt(v_ref + eps * eps);
    d_ref = beta1 * d_ref + (1.0 - beta1) * g1;
    v_ref = beta2 * v_ref + (1.0 - beta2) * g1 * g1;
    w_ref = (1.0 - lambda) * w_ref - gamma * d_ref / std::sqrt(v_ref + eps * eps);

    ParamGroup g = scalar_group(1.0);
    OptimizerConfig cfg;
    cfg.method = Method::PreSgdW;
    cfg.gamma = gamma;
    cfg.lambda = lambda;
    cfg.eps = eps;
    Preconditioner pre = Preconditioner::adam(beta2);
    FeedbackState fb(FeedbackKind::Momentum, AlphaSchedule::constant(1.0 - beta1));
    for (std::size_t k = 0; k < 2; ++k) {
        Matrix grad{{k == 0 ? g0 : g1}};
        pre.update(grad);
        const Matrix& d = fb.update(grad);
        step_presgdw(g, cfg, pre, d, k);
    }
    CHECK(g.weight(0, 0) == doctest::Approx(w_ref).epsilon(1e-12));
}

TEST_CASE("steepest descent under the sign geometry rescales by the l1 norm") {
    ParamGroup g;
    g.weight = Matrix{{0.0, 0.0}};
    g.geometry = Geometry::sign();
    OptimizerConfig cfg;
    cfg.method = Method::SteepestDescent;
    cfg.gamma = 0.1;
    Matrix d{{2.0, -3.0}};
    step_steepest(g, cfg, d, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(-0.5));
    CHECK(g.weight(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("steepest descent under l2 is an sgd step") {
    ParamGroup g;
    g.weight = Matrix{{1.0, -2.0}};
    g.geometry = Geometry::l2();
    OptimizerConfig cfg;
    cfg.method = Method::SteepestDescent;
    cfg.gamma = 0.05;
    Matrix d{{3.0, 4.0}};
    step_steepest(g, cfg, d, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(1.0 - 0.05 * 3.0));
    CHECK(g.weight(0, 1) == doctest::Approx(-2.0 - 0.05 * 4.0));
}

TEST_CASE("steepest descent under the spectral geometry takes a nuclear-scaled polar step") {
    ParamGroup g;
    g.weight = Matrix(2, 2);
    g.geometry = Geometry::spectral(2, 2);
    OptimizerConfig cfg;
    cfg.method = Method::SteepestDescent;
    cfg.gamma = 1.0;
    Matrix d{{3.0, 0.0}, {0.0, 1.0}};
    step_steepest(g, cfg, d, 0);
    Matrix want = Matrix::identity(2) * -4.0;
    CHECK(frob_dist(g.weight, want) < 1e-9);
}

TEST_CASE("uscg under the sign geometry moves by gamma in each coordinate") {
    ParamGroup g;
    g.weight = Matrix{{0.0, 0.0}};
    g.geometry = Geometry::sign();
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    cfg.gamma = 0.1;
    Matrix d{{2.0, -3.0}};
    step_uscg(g, cfg, d, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(-0.1));
    CHECK(g.weight(0, 1) == doctest::Approx(0.1));
}

TEST_CASE("uscg stays inside the accumulated stepsize ball") {
    ParamGroup g;
    g.weight = Matrix(3, 3);
    g.geometry = Geometry::spectral_rms(3, 3);
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    cfg.gamma = 0.05;
    RngStream rng(40);
    const std::size_t n = 50;
    for (std::size_t k = 0; k < n; ++k) {
        Matrix d = gaussian(rng, 3, 3, 1.0);
        step_uscg(g, cfg, d, k);
        CHECK(g.geometry.norm(g.weight) <=
              cfg.gamma * static_cast<double>(k + 1) + 1e-9);
    }
}

TEST_CASE("one unit uscg step lands on the unit sphere") {
    ParamGroup g;
    g.weight = Matrix(4, 3);
    g.geometry = Geometry::spectral_rms(4, 3);
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    cfg.gamma = 1.0;
    RngStream rng(1);
    Matrix d = gaussian(rng, 4, 3, 1.0);
    step_uscg(g, cfg, d, 0);
    CHECK(g.geometry.norm(g.weight) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("uscg honors an explicit radius") {
    ParamGroup g;
    g.weight = Matrix{{0.0}};
    g.geometry = Geometry::sign();
    g.radius = 2.5;
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    cfg.gamma = 0.1;
    Matrix d{{1.0}};
    step_uscg(g, cfg, d, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(-0.25));
}

TEST_CASE("scg walks the sign-ball recursion") {
    ParamGroup g;
    g.weight = Matrix{{0.0, 0.0}};
    g.geometry = Geometry::sign();
    g.radius = 1.0;
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.gamma = 0.5;
    cfg.lambda = 0.5;
    Matrix d{{2.0, -3.0}};
    step_scg(g, cfg, d, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(-0.5));
    CHECK(g.weight(0, 1) == doctest::Approx(0.5));
    step_scg(g, cfg, d, 1);
    CHECK(g.weight(0, 0) == doctest::Approx(-0.75));
    CHECK(g.weight(0, 1) == doctest::Approx(0.75));
    for (std::size_t k = 2; k < 50; ++k) {
        step_scg(g, cfg, d, k);
        CHECK(g.geometry.norm(g.weight) <= 1.0 + 1e-9);
    }
}

TEST_CASE("scg with lambda one jumps to the ball boundary") {
    ParamGroup g;
    g.weight = Matrix{{0.3, -0.1}};
    g.geometry = Geometry::sign();
    g.radius = 2.0;
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.gamma = 2.0;
    cfg.lambda = 1.0;
    Matrix d{{1.0, -4.0}};
    step_scg(g, cfg, d, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(-2.0));
    CHECK(g.weight(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("scg with a vanished schedule leaves the weight alone") {
    ParamGroup g;
    g.weight = Matrix{{0.4}};
    g.geometry = Geometry::sign();
    g.radius = 1.0;
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.gamma = 0.5;
    cfg.lambda = 0.5;
    cfg.schedule = Schedule::parse("linear", 10);
    Matrix d{{1.0}};
    step_scg(g, cfg, d, 10);  // s_10 = 0, so lambda_10 = 0
    CHECK(g.weight(0, 0) == doctest::Approx(0.4));
}

TEST_CASE("scg derives its radius from gamma over lambda") {
    ParamGroup g;
    g.weight = Matrix{{0.0}};
    g.geometry = Geometry::sign();
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.gamma = 0.02;
    cfg.lambda = 0.002;
    Matrix d{{5.0}};
    step_scg(g, cfg, d, 0);
    // rho = gamma/lambda = 10, so the step is lambda * rho * (-1)
    CHECK(g.weight(0, 0) == doctest::Approx(-0.02));
}

TEST_CASE("scg rejects a stepsize outside the simplex") {
    ParamGroup g;
    g.weight = Matrix{{0.0}};
    g.geometry = Geometry::sign();
    g.radius = 1.0;
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.gamma = 2.0;
    cfg.lambda = 2.0;
    Matrix d{{1.0}};
    CHECK_THROWS_AS(step_scg(g, cfg, d, 0), std::invalid_argument);
}

TEST_CASE("scg_from_pytorch maps the stepsize and decay") {
    ScgParams p = scg_from_pytorch(0.02, 0.1);
    CHECK(p.lambda == doctest::Approx(0.002));
    CHECK(p.rho == doctest::Approx(10.0));

    ScgParams q = scg_from_pytorch(0.3, 1.0);
    CHECK(q.lambda == doctest::Approx(0.3));
    CHECK(q.rho == doctest::Approx(1.0));

    CHECK_THROWS_AS(scg_from_pytorch(0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scg_from_pytorch(0.1, -1.0), std::invalid_argument);
}

TEST_CASE("scg reproduces the pytorch decay recursion step for step") {
    const double lr = 0.05, wd = 0.4;
    ScgParams p = scg_from_pytorch(lr, wd);

    ParamGroup g;
    g.weight = Matrix(2, 3);
    g.geometry = Geometry::spectral_rms(2, 3);
    g.radius = p.rho;
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.gamma = lr;
    cfg.lambda = p.lambda;

    Matrix ref(2, 3);
    RngStream rng(41);
    for (std::size_t k = 0; k < 100; ++k) {
        Matrix d = gaussian(rng, 2, 3, 1.0);
        // PyTorch-style recursion: x <- (1 - lr wd) x + lr lmo(d)
        Matrix l = g.geometry.lmo(d);
        ref *= 1.0 - lr * wd;
        ref.add_scaled(l, lr);
        step_scg(g, cfg, d, k);
        CHECK(frob_dist(g.weight, ref) < 1e-12);
    }
}

TEST_CASE("uscg under l2 is normalized gradient descent") {
    ParamGroup g;
    g.weight = Matrix(1, 4);
    g.geometry = Geometry::l2();
    Matrix ref(1, 4);
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    cfg.gamma = 0.07;
    RngStream rng(42);
    for (std::size_t k = 0; k < 30; ++k) {
        Matrix d = gaussian(rng, 1, 4, 1.0);
        ref.add_scaled(d, -cfg.gamma / d.frobenius_norm());
        step_uscg(g, cfg, d, k);
        CHECK(frob_dist(g.weight, ref) < 1e-12);
    }
}

TEST_CASE("uscg under the sign geometry is signsgd") {
    ParamGroup g;
    g.weight = Matrix(1, 4);
    g.geometry = Geometry::sign();
    Matrix ref(1, 4);
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    cfg.gamma = 0.03;
    RngStream rng(43);
    for (std::size_t k = 0; k < 30; ++k) {
        Matrix d = gaussian(rng, 1, 4, 1.0);
        for (std::size_t i = 0; i < 4; ++i)
            ref[i] -= cfg.gamma * (d[i] > 0.0 ? 1.0 : (d[i] < 0.0 ? -1.0 : 0.0));
        step_uscg(g, cfg, d, k);
        CHECK(frob_dist(g.weight, ref) < 1e-12);
    }
}

TEST_CASE("presgdw with identity preconditioner and plain feedback is sgd") {
    ParamGroup g;
    g.weight = Matrix(2, 2);
    g.weight.fill(0.5);
    Matrix ref = g.weight;
    OptimizerConfig cfg;
    cfg.method = Method::PreSgdW;
    cfg.gamma = 0.02;
    cfg.lambda = 0.0;
    Preconditioner pre = Preconditioner::identity();
    RngStream rng(44);
    for (std::size_t k = 0; k < 30; ++k) {
        Matrix d = gaussian(rng, 2, 2, 1.0);
        pre.update(d);
        ref.add_scaled(d, -cfg.gamma);
        step_presgdw(g, cfg, pre, d, k);
        CHECK(frob_dist(g.weight, ref) < 1e-12);
    }
}

TEST_CASE("the scheduler scales both the stepsize and the decay") {
    OptimizerConfig cfg;
    cfg.method = Method::PreSgdW;
    cfg.gamma = 0.5;
    cfg.lambda = 0.2;
    cfg.schedule = Schedule::parse("linear", 4);

    ParamGroup g = scalar_group(1.0);
    Preconditioner pre = Preconditioner::identity();
    Matrix d{{1.0}};
    pre.update(d);
    // at k=2, s_k = 0.5: w <- (1 - 0.1) * 1 - 0.25 * 1
    step_presgdw(g, cfg, pre, d, 2);
    CHECK(g.weight(0, 0) == doctest::Approx(0.9 - 0.25));
}

TEST_CASE("lr_scale multiplies the stepsize but not the decay") {
    OptimizerConfig cfg;
    cfg.method = Method::PreSgdW;
    cfg.gamma = 0.1;
    cfg.lambda = 0.2;
    ParamGroup g = scalar_group(1.0);
    g.lr_scale = 3.0;
    Preconditioner pre = Preconditioner::identity();
    Matrix d{{1.0}};
    pre.update(d);
    // w <- (1 - 0.2) * 1 - 0.3 * 1
    step_presgdw(g, cfg, pre, d, 0);
    CHECK(g.weight(0, 0) == doctest::Approx(0.8 - 0.3));
}

TEST_CASE("network_step with one group matches the standalone op") {
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    cfg.gamma = 0.1;
    RngStream rng(45);
    Matrix d0 = gaussian(rng, 3, 2, 1.0);

    ParamGroup lone;
    lone.weight = Matrix(3, 2);
    lone.geometry = Geometry::colnorm(3, 2);
    ParamGroup same = lone;

    std::vector<ParamGroup> groups;
    groups.push_back(same);
    std::vector<Matrix> ds{d0};
    std::vector<Preconditioner> pres;
    pres.push_back(Preconditioner::identity());
    network_step(groups, cfg, ds, pres, 0);
    step_uscg(lone, cfg, d0, 0);
    CHECK(frob_dist(groups[0].weight, lone.weight) < 1e-15);
}

TEST_CASE("network_step keeps every scg block inside its ball") {
    OptimizerConfig cfg;
    cfg.method = Method::Scg;
    cfg.gamma = 0.2;
    cfg.lambda = 0.1;
    std::vector<ParamGroup> groups(3);
    groups[0].weight = Matrix(4, 3);
    groups[0].geometry = Geometry::spectral_rms(4, 3);
    groups[0].radius = 1.5;
    groups[1].weight = Matrix(2, 4);
    groups[1].geometry = Geometry::sign();
    groups[1].radius = 0.5;
    groups[2].weight = Matrix(1, 4);
    groups[2].geometry = Geometry::l2();
    groups[2].radius = 2.0;
    std::vector<Preconditioner> pres(3, Preconditioner::identity());

    RngStream rng(46);
    for (std::size_t k = 0; k < 40; ++k) {
        std::vector<Matrix> ds;
        ds.push_back(gaussian(rng, 4, 3, 1.0));
        ds.push_back(gaussian(rng, 2, 4, 1.0));
        ds.push_back(gaussian(rng, 1, 4, 1.0));
        network_step(groups, cfg, ds, pres, k);
        for (const ParamGroup& g : groups)
            CHECK(g.geometry.norm(g.weight) / g.radius <= 1.0 + 1e-9);
    }
}

TEST_CASE("network steepest descent shares one global dual scale") {
    OptimizerConfig cfg;
    cfg.method = Method::SteepestDescent;
    cfg.gamma = 0.1;

    RngStream rng(47);
    std::vector<Matrix> ds;
    ds.push_back(gaussian(rng, 3, 3, 1.0));
    ds.push_back(gaussian(rng, 2, 3, 1.0));

    std::vector<ParamGroup> groups(2);
    groups[0].weight = Matrix(3, 3);
    groups[0].geometry = Geometry::spectral(3, 3);
    groups[0].radius = 2.0;
    groups[1].weight = Matrix(2, 3);
    groups[1].geometry = Geometry::sign();
    groups[1].radius = 0.5;
    std::vector<ParamGroup> solo = groups;
    std::vector<Preconditioner> pres(2, Preconditioner::identity());

    network_step(groups, cfg, ds, pres, 0);

    // the network step scales every block by the product dual norm;
    // independent per-block steps use each block's own dual norm instead
    const double global_dual = 2.0 * groups[0].geometry.dual_norm(ds[0]) +
                               0.5 * groups[1].geometry.dual_norm(ds[1]);
    for (std::size_t l = 0; l < 2; ++l) {
        step_steepest(solo[l], cfg, ds[l], 0);
        const double local_dual = solo[l].geometry.dual_norm(ds[l]);
        const double rho = solo[l].radius;
        // block update: w += gamma * global_dual * rho * lmo. the solo step
        // used gamma * local_dual * lmo, so the ratio of the two moves is
        // exactly rho * global_dual / local_dual.
        Matrix net_move = groups[l].weight;
        Matrix solo_move = solo[l].weight;
        const double want_ratio = rho * global_dual / local_dual;
        CHECK(frob_dist(net_move, solo_move * want_ratio) <
              1e-9 * net_move.frobenius_norm());
    }
}

TEST_CASE("network_step rejects arity mismatches") {
    OptimizerConfig cfg;
    cfg.method = Method::Uscg;
    std::vector<ParamGroup> groups(2);
    groups[0].weight = Matrix(1, 1);
    groups[1].weight = Matrix(1, 1);
    std::vector<Matrix> ds;
    ds.push_back(Matrix(1, 1));
    std::vector<Preconditioner> pres(2, Preconditioner::identity());
    CHECK_THROWS_AS(network_step(groups, cfg, ds, pres, 0), std::invalid_argument);
}

TEST_CASE("rank-one gradients make all spectral-flavored directions collinear") {
    RngStream rng(48);
    Matrix u = gaussian(rng, 5, 1, 1.0);
    Matrix v = gaussian(rng, 1, 3, 1.0);
    Matrix d = matmul(u, v);

    Geometry spect = Geometry::spectral(5, 3);
    Matrix lmo_dir = spect.lmo(d);
    Matrix frob_dir = d * (-1.0 / d.frobenius_norm());
    Matrix spec_dir = d * (-1.0 / svd(d).sigma[0]);

    auto cosine = [](const Matrix& a, const Matrix& b) {
        return dot(a, b) / (a.frobenius_norm() * b.frobenius_norm());
    };
    CHECK(cosine(lmo_dir, frob_dir) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cosine(lmo_dir, spec_dir) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("steepest descent decreases a convex quadratic") {
    // f(w) = 0.5 ||w - t||_F^2 under each geometry, deterministic gradients
    RngStream rng(49);
    Matrix target = gaussian(rng, 3, 3, 1.0);
    const Geometry kinds[] = {Geometry::l2(), Geometry::sign(), Geometry::spectral(3, 3),
                              Geometry::colnorm(3, 3), Geometry::rownorm(3, 3)};
    for (const Geometry& geo : kinds) {
        ParamGroup g;
        g.weight = Matrix(3, 3);
        g.geometry = geo;
        OptimizerConfig cfg;
        cfg.method = Method::SteepestDescent;
        cfg.gamma = 0.02;
        double prev = 0.5 * frob_dist(g.weight, target) * frob_dist(g.weight, target);
        for (std::size_t k = 0; k < 60; ++k) {
            Matrix d = g.weight - target;
            step_steepest(g, cfg, d, k);
            const double f = 0.5 * frob_dist(g.weight, target) * frob_dist(g.weight, target);
            CHECK(f < prev);
            prev = f;
        }
    }
}
