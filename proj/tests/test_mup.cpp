#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "normopt/coordcheck.hpp"
#include "normopt/feedback.hpp"
#include "normopt/matrix.hpp"
#include "normopt/mup.hpp"
#include "normopt/net.hpp"
#include "normopt/optimize.hpp"
#include "normopt/precondition.hpp"
#include "normopt/rng.hpp"
#include "test_util.hpp"

using namespace normopt;
using testutil::frob_dist;

namespace {

// Turn exponents into concrete layer specs for a width-p MLP.
Mlp realize(const AbcParam& abc, Activation act, std::uint64_t seed) {
    std::vector<LayerSpec> specs(abc.num_layers());
    for (std::size_t l = 0; l < abc.num_layers(); ++l) {
        const std::size_t out = l + 1 == abc.num_layers() ? abc.out_dim : abc.width;
        const std::size_t in = l == 0 ? abc.in_dim : abc.width;
        specs[l] = {out, in, abc.init_std(l), abc.weight_scale(l), abc.lr_scale(l),
                    Geometry::l2(), 0.0, "w" + std::to_string(l)};
    }
    return make_mlp(specs, act, RngStream(seed));
}

double power_iteration_sigma_max(const Matrix& w, std::size_t iters = 100) {
    RngStream rng(999);
    Matrix v = gaussian(rng, w.cols(), 1, 1.0);
    double sigma = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        Matrix u = matmul(w, v);
        sigma = u.frobenius_norm() / v.frobenius_norm();
        v = matmul_at_b(w, u);
        const double n = v.frobenius_norm();
        if (n == 0.0) return 0.0;
        v *= 1.0 / n;
    }
    return sigma;
}

CoordRow synthetic_row(std::size_t width, std::size_t step, std::size_t layer, double delta_rms,
                       bool diverged = false) {
    CoordRow r;
    r.width = width;
    r.step = step;
    r.layer = layer;
    r.delta_rms = delta_rms;
    r.diverged = diverged;
    return r;
}

}  // namespace

TEST_CASE("standard parameterization realizes the textbook initialization") {
    AbcParam sp = make_sp(2, 256, 10, 10, 0.01);
    REQUIRE(sp.num_layers() == 3);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(sp.a[l] == 0.0);
        CHECK(sp.weight_scale(l) == 1.0);
        CHECK(sp.lr(l) == doctest::Approx(0.01));  // one global stepsize
    }
    CHECK(sp.init_std(0) == doctest::Approx(std::sqrt(1.0 / 10.0)));
    CHECK(sp.init_std(1) * sp.init_std(1) == doctest::Approx(1.0 / 256.0));
    CHECK(sp.init_std(2) * sp.init_std(2) == doctest::Approx(1.0 / 256.0));
}

TEST_CASE("maximal-update parameterization tilts output init and the stepsizes") {
    AbcParam mup = make_mup(2, 256, 10, 10, 0.01);
    CHECK(mup.lr(0) == doctest::Approx(2.56));             // eta * p
    CHECK(mup.lr(1) == doctest::Approx(0.01));             // eta
    CHECK(mup.lr(2) == doctest::Approx(3.90625e-5));       // eta / p
    CHECK(mup.init_std(2) == doctest::Approx(1.0 / 256));  // variance 1/p^2
    CHECK(mup.init_std(1) * mup.init_std(1) == doctest::Approx(1.0 / 256.0));
    CHECK(mup.init_std(0) == doctest::Approx(std::sqrt(1.0 / 10.0)));
}

TEST_CASE("the two parameterizations coincide at width one") {
    AbcParam sp = make_sp(2, 1, 7, 3, 0.05);
    AbcParam mup = make_mup(2, 1, 7, 3, 0.05);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(sp.weight_scale(l) == mup.weight_scale(l));
        CHECK(sp.init_std(l) == mup.init_std(l));
        CHECK(sp.lr(l) == mup.lr(l));
    }
}

TEST_CASE("parameterization factories reject degenerate settings") {
    CHECK_THROWS_AS(make_sp(0, 8, 4, 3, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_sp(1, 0, 4, 3, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_mup(1, 8, 4, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_mup(1, 8, 4, 3, -0.1), std::invalid_argument);
}

TEST_CASE("exponent shift moves a, b, c in lockstep and round-trips") {
    AbcParam base = make_mup(2, 64, 4, 3, 0.01);
    AbcParam same = shift_symmetry(base, 0.0);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(same.a[l] == base.a[l]);
        CHECK(same.b[l] == base.b[l]);
        CHECK(same.c[l] == base.c[l]);
    }
    AbcParam shifted = shift_symmetry(base, 0.5);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(shifted.a[l] == base.a[l] + 0.5);
        CHECK(shifted.b[l] == base.b[l] - 0.5);
        CHECK(shifted.c[l] == base.c[l] - 1.0);
    }
    AbcParam back = shift_symmetry(shifted, -0.5);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(back.a[l] == base.a[l]);
        CHECK(back.b[l] == base.b[l]);
        CHECK(back.c[l] == base.c[l]);
    }
}

TEST_CASE("shifted exponents leave the training trajectory unchanged") {
    Dataset data = make_teacher_task(4, 3, 8, 0.0, RngStream(70));
    for (double alpha : {-1.0, -0.5, 0.3, 0.5, 1.0}) {
        CAPTURE(alpha);
        AbcParam base = make_mup(2, 64, 4, 3, 0.002);
        AbcParam shifted = shift_symmetry(base, alpha);
        Mlp mb = realize(base, Activation::Identity, 71);
        Mlp ms = realize(shifted, Activation::Identity, 71);
        OptimizerConfig cfg;
        cfg.method = Method::PreSgdW;
        cfg.gamma = base.eta;
        Preconditioner id = Preconditioner::identity();
        for (std::size_t k = 0; k < 10; ++k) {
            ForwardCache cb = forward(mb, data.inputs);
            ForwardCache cs = forward(ms, data.inputs);
            CHECK(frob_dist(cb.output, cs.output) < 1e-6 * cb.output.frobenius_norm());
            auto gb = backward(mb, cb, data.targets, Loss::Mse);
            auto gs = backward(ms, cs, data.targets, Loss::Mse);
            for (std::size_t l = 0; l < 3; ++l) {
                step_presgdw(mb.layers[l], cfg, id, gb[l], k);
                step_presgdw(ms.layers[l], cfg, id, gs[l], k);
            }
        }
    }
}

TEST_CASE("per-transition radii follow the dimension ratios") {
    const std::size_t dims[] = {10, 256, 256, 10};
    auto radii = spectral_radii(dims, 1.0);
    REQUIRE(radii.size() == 3);
    CHECK(radii[0] == doctest::Approx(std::sqrt(25.6)));
    CHECK(radii[1] == 1.0);
    CHECK(radii[2] == doctest::Approx(std::sqrt(10.0 / 256.0)));

    auto doubled = spectral_radii(dims, 2.0);
    for (std::size_t l = 0; l < 3; ++l) CHECK(doubled[l] == doctest::Approx(2.0 * radii[l]));

    const std::size_t lone[] = {16};
    CHECK_THROWS_AS(spectral_radii(lone, 1.0), std::invalid_argument);
    const std::size_t with_zero[] = {16, 0, 4};
    CHECK_THROWS_AS(spectral_radii(with_zero, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(spectral_radii(dims, 0.0), std::invalid_argument);
}

TEST_CASE("init variance adapts to the layer aspect ratio") {
    CHECK(spectral_init_var(256, 256) == doctest::Approx(1.0 / 256.0));
    CHECK(spectral_init_var(256, 16) == doctest::Approx(1.0 / 16.0));
    CHECK(spectral_init_var(8, 256) == doctest::Approx(8.0 / (256.0 * 256.0)));
    CHECK_THROWS_AS(spectral_init_var(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(spectral_init_var(4, 0), std::invalid_argument);
}

TEST_CASE("spectral init keeps the rms-to-rms gain near one at every width") {
    RngStream master(80);
    std::uint64_t id = 0;
    for (std::size_t width : {64, 256, 1024, 2048}) {
        CAPTURE(width);
        const std::size_t shapes[][2] = {{width, 16}, {16, width}, {width, width}};
        for (const auto& s : shapes) {
            const std::size_t p_out = s[0], p_in = s[1];
            RngStream stream = master.split(id++);
            Matrix w = gaussian(stream, p_out, p_in, std::sqrt(spectral_init_var(p_out, p_in)));
            const double gain = std::sqrt(static_cast<double>(p_in) / static_cast<double>(p_out)) *
                                power_iteration_sigma_max(w);
            CAPTURE(p_out);
            CAPTURE(p_in);
            CHECK(gain > 0.5);
            CHECK(gain < 2.5);
        }
    }
}

TEST_CASE("numerical gradient rank counts the significant directions") {
    CHECK(grad_rank(Matrix(4, 6)) == 0);
    CHECK(grad_rank(Matrix::identity(3)) == 3);

    RngStream rng(81);
    Matrix u = gaussian(rng, 5, 1, 1.0);
    Matrix v = gaussian(rng, 4, 1, 1.0);
    CHECK(grad_rank(matmul_a_bt(u, v)) == 1);

    CHECK_THROWS_AS(grad_rank(Matrix()), std::invalid_argument);
    CHECK_THROWS_AS(grad_rank(Matrix::identity(2), -1.0), std::invalid_argument);
}

TEST_CASE("single-sample gradients are rank one in every layer") {
    std::vector<LayerSpec> specs(3);
    specs[0] = {10, 6, 0.4, 1.0, 1.0, Geometry::l2(), 0.0, "w1"};
    specs[1] = {10, 10, 0.3, 1.0, 1.0, Geometry::l2(), 0.0, "w2"};
    specs[2] = {4, 10, 0.3, 1.0, 1.0, Geometry::l2(), 0.0, "w3"};
    Mlp m = make_mlp(specs, Activation::Tanh, RngStream(82));
    RngStream rng(83);

    Matrix z1 = gaussian(rng, 6, 1, 1.0);
    Matrix y1 = gaussian(rng, 4, 1, 1.0);
    ForwardCache c1 = forward(m, z1);
    for (const Matrix& g : backward(m, c1, y1, Loss::Mse)) CHECK(grad_rank(g) == 1);

    Matrix z8 = gaussian(rng, 6, 8, 1.0);
    Matrix y8 = gaussian(rng, 4, 8, 1.0);
    ForwardCache c8 = forward(m, z8);
    for (const Matrix& g : backward(m, c8, y8, Loss::Mse)) {
        CHECK(grad_rank(g) <= 8);
        CHECK(grad_rank(g) >= 2);
    }
}

TEST_CASE("coordinate check records a baseline row and per-step drift") {
    Dataset data = make_teacher_task(3, 2, 8, 0.0, RngStream(84));
    auto make = [&](std::size_t w) {
        AbcParam abc = make_sp(1, w, 3, 2, 0.01);
        CoordSetup setup;
        setup.net = realize(abc, Activation::Tanh, 85);
        OptimizerConfig cfg;
        cfg.gamma = abc.eta;
        setup.step = [data, cfg](Mlp& net, std::size_t k) {
            Preconditioner id = Preconditioner::identity();
            ForwardCache c = forward(net, data.inputs);
            auto g = backward(net, c, data.targets, Loss::Mse);
            for (std::size_t l = 0; l < net.layers.size(); ++l)
                step_presgdw(net.layers[l], cfg, id, g[l], k);
        };
        return setup;
    };
    RngStream prng(86);
    Matrix probe = gaussian(prng, 3, 4, 1.0);
    const std::size_t widths[] = {8, 16};
    auto rows = coord_check(make, widths, 2, probe);
    // two widths x three recorded steps x (one hidden preact + output)
    CHECK(rows.size() == 2 * 3 * 2);
    for (const auto& r : rows) {
        CHECK(!r.diverged);
        CHECK(r.l1 >= 0.0);
        CHECK(r.rms >= r.l1);  // quadratic mean dominates the mean of moduli
        if (r.step == 0) {
            CHECK(r.delta_l1 == 0.0);
            CHECK(r.delta_rms == 0.0);
        } else {
            CHECK(r.delta_rms > 0.0);
        }
    }
    CHECK_THROWS_AS(coord_check(make, std::span<const std::size_t>(), 2, probe),
                    std::invalid_argument);
}

TEST_CASE("width-scaled stepsizes keep feature drift flat across widths") {
    Dataset data = make_teacher_task(4, 3, 16, 0.0, RngStream(72));
    RngStream prng(73);
    Matrix probe = gaussian(prng, 4, 8, 1.0);
    auto make = [&](std::size_t w) {
        AbcParam abc = make_mup(2, w, 4, 3, 0.2);
        CoordSetup setup;
        setup.net = realize(abc, Activation::Tanh, 74);
        OptimizerConfig cfg;
        cfg.gamma = abc.eta;
        setup.step = [data, cfg](Mlp& net, std::size_t k) {
            Preconditioner id = Preconditioner::identity();
            ForwardCache c = forward(net, data.inputs);
            auto g = backward(net, c, data.targets, Loss::Mse);
            for (std::size_t l = 0; l < net.layers.size(); ++l)
                step_presgdw(net.layers[l], cfg, id, g[l], k);
        };
        return setup;
    };
    const std::size_t widths[] = {128, 256, 512, 1024};
    auto rows = coord_check(make, widths, 5, probe);
    for (std::size_t layer = 1; layer <= 3; ++layer) {
        double lo = 1e300, hi = 0.0;
        for (const auto& r : rows)
            if (r.layer == layer && r.step == 5) {
                lo = std::min(lo, r.delta_rms);
                hi = std::max(hi, r.delta_rms);
            }
        CAPTURE(layer);
        CHECK(lo > 0.0);
        CHECK(hi / lo <= 4.0);
        CHECK(coord_verdict(rows, layer, 5) == CoordVerdict::FeatureLearning);
    }
}

TEST_CASE("global-stepsize adaptive training blows the logits up with width") {
    Dataset data = make_teacher_task(4, 3, 16, 0.0, RngStream(72));
    RngStream prng(73);
    Matrix probe = gaussian(prng, 4, 8, 1.0);
    auto make = [&](std::size_t w) {
        AbcParam abc = make_sp(2, w, 4, 3, 3e-4);
        CoordSetup setup;
        setup.net = realize(abc, Activation::Tanh, 74);
        OptimizerConfig cfg;
        cfg.gamma = abc.eta;
        auto pres = std::make_shared<std::vector<Preconditioner>>();
        auto feeds = std::make_shared<std::vector<FeedbackState>>();
        for (std::size_t l = 0; l < 3; ++l) {
            pres->push_back(Preconditioner::adam(0.99));
            feeds->push_back(FeedbackState(FeedbackKind::Momentum));
        }
        setup.step = [data, cfg, pres, feeds](Mlp& net, std::size_t k) {
            ForwardCache c = forward(net, data.inputs);
            auto g = backward(net, c, data.targets, Loss::Mse);
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                (*pres)[l].update(g[l]);
                const Matrix& d = (*feeds)[l].update(g[l]);
                step_presgdw(net.layers[l], cfg, (*pres)[l], d, k);
            }
        };
        return setup;
    };
    const std::size_t widths[] = {128, 256, 512, 1024};
    auto rows = coord_check(make, widths, 5, probe);
    double narrow = 0.0, wide = 0.0;
    for (const auto& r : rows)
        if (r.layer == 3 && r.step == 5) {
            if (r.width == 128) narrow = r.delta_rms;
            if (r.width == 1024) wide = r.delta_rms;
        }
    REQUIRE(narrow > 0.0);
    CHECK(wide / narrow >= 4.0);
    CHECK(coord_verdict(rows, 3, 5) == CoordVerdict::Unstable);
}

TEST_CASE("a single width cannot support a scaling verdict") {
    std::vector<CoordRow> rows = {synthetic_row(64, 3, 1, 0.5)};
    CHECK(coord_verdict(rows, 1, 3) == CoordVerdict::InsufficientWidths);
    CHECK(coord_verdict(rows, 2, 3) == CoordVerdict::InsufficientWidths);  // no such layer
}

TEST_CASE("verdicts classify synthetic drift tables") {
    using V = CoordVerdict;
    auto table = [](std::initializer_list<double> finals) {
        std::vector<CoordRow> rows;
        std::size_t w = 64;
        for (double v : finals) {
            rows.push_back(synthetic_row(w, 5, 1, v));
            w *= 2;
        }
        return rows;
    };
    CHECK(coord_verdict(table({1.0, 1.2, 0.9, 1.1}), 1, 5) == V::FeatureLearning);
    CHECK(coord_verdict(table({0.5, 1.0, 1.5, 2.5}), 1, 5) == V::Unstable);   // 5x endpoints
    CHECK(coord_verdict(table({2.0, 1.0, 0.8, 0.4}), 1, 5) == V::Lazy);       // 5x decay
    CHECK(coord_verdict(table({1.0, 9.0, 1.0, 1.1}), 1, 5) == V::Unstable);   // wild interior
    CHECK(coord_verdict(table({0.0, 0.0, 0.0, 0.0}), 1, 5) == V::Lazy);       // nothing moves
    CHECK(coord_verdict(table({0.0, 0.5, 0.5, 0.5}), 1, 5) == V::Unstable);   // drift appears
    CHECK(coord_verdict(table({0.5, 0.5, 0.5, 0.0}), 1, 5) == V::Lazy);       // drift vanishes

    auto diverged = table({1.0, 1.0, 1.0, 1.0});
    diverged[2].diverged = true;
    CHECK(coord_verdict(diverged, 1, 5) == V::Unstable);

    CHECK(std::string(to_string(V::FeatureLearning)) == "feature_learning");
    CHECK(std::string(to_string(V::Lazy)) == "lazy");
    CHECK(std::string(to_string(V::Unstable)) == "unstable");
    CHECK(std::string(to_string(V::InsufficientWidths)) == "insufficient_widths");
}

TEST_CASE("a width that explodes is flagged on its rows instead of throwing") {
    Dataset data = make_teacher_task(3, 2, 4, 0.0, RngStream(90));
    auto make = [&](std::size_t w) {
        AbcParam abc = make_sp(1, w, 3, 2, 0.01);
        CoordSetup setup;
        setup.net = realize(abc, Activation::Identity, 91);
        setup.step = [](Mlp& net, std::size_t) {
            net.layers[0].weight.fill(std::numeric_limits<double>::infinity());
        };
        return setup;
    };
    RngStream prng(92);
    Matrix probe = gaussian(prng, 3, 2, 1.0);
    const std::size_t widths[] = {8, 16};
    auto rows = coord_check(make, widths, 1, probe);
    bool any_flagged = false;
    for (const auto& r : rows) {
        if (r.step == 0) CHECK(!r.diverged);
        if (r.step == 1) {
            CHECK(r.diverged);
            any_flagged = true;
        }
    }
    CHECK(any_flagged);
    CHECK(coord_verdict(rows, 1, 1) == CoordVerdict::Unstable);
}
