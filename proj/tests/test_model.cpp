#include <doctest.h>

#include <cmath>

#include "hwctl/errors.hpp"
#include "hwctl/model.hpp"
#include "hwctl/polytope.hpp"
#include "test_util.hpp"

using namespace hwctl;
using tu::ref_model;

TEST_CASE("queue_map worked values") {
    CHECK(queue_map({3.0, -2.0}, tu::mat2(0.5, 0.0)) == Vec{2.0, 0.0});
    CHECK(queue_map({-1.0, 2.0}, tu::mat2(0.0, 0.5)) == Vec{0.0, 1.5});

    // u = 0 is the positive-part map, exactly
    RngStream s(CounterRng(11, 0));
    for (int t = 0; t < 50; ++t) {
        Vec x = tu::rand_box(s, 3, 6.0);
        ControlMatrix z(3);
        Vec q = queue_map(x, z);
        for (int i = 0; i < 3; ++i) CHECK(q[i] == pos(x[i]));
    }
}

TEST_CASE("queue_map nonnegative on the feasible set") {
    ModelParams p = ref_model();
    RngStream s(CounterRng(12, 0));
    for (int t = 0; t < 200; ++t) {
        Vec x = tu::rand_box(s, p.d, 5.0);
        FeasibilityContext ctx = make_context(p, x);
        for (const ControlMatrix& u : feasible_candidates(ctx, 6, 1000 + t)) {
            REQUIRE(contains(ctx, u, 1e-9));
            Vec q = queue_map(x, u);
            for (double v : q) CHECK(v >= -1e-9);
        }
    }
}

TEST_CASE("limiting_drift worked values on the reference model") {
    ModelParams p = ref_model();
    Vec x{-1.0, 2.0};

    Vec b0 = limiting_drift(p, x, ControlMatrix(2));
    CHECK(b0[0] == 0.0);
    CHECK(b0[1] == doctest::Approx(-3.0).epsilon(1e-14));

    Vec b1 = limiting_drift(p, x, tu::mat2(0.0, 0.5));
    CHECK(b1[0] == 0.0);
    CHECK(b1[1] == doctest::Approx(-2.8).epsilon(1e-14));

    Vec at0 = limiting_drift(p, {0.0, 0.0}, ControlMatrix(2));
    CHECK(at0 == p.ell);
}

TEST_CASE("limiting_drift is affine in the control") {
    ModelParams p = ref_model();
    RngStream s(CounterRng(13, 0));
    for (int t = 0; t < 100; ++t) {
        Vec x = tu::rand_box(s, 2, 5.0);
        FeasibilityContext ctx = make_context(p, x);
        auto cands = feasible_candidates(ctx, 4, 2000 + t);
        REQUIRE(cands.size() >= 2);
        const ControlMatrix &u = cands[cands.size() - 1], &v = cands[cands.size() - 2];
        ControlMatrix mid(2);
        for (size_t k = 0; k < mid.a.size(); ++k) mid.a[k] = 0.5 * (u.a[k] + v.a[k]);
        Vec bu = limiting_drift(p, x, u), bv = limiting_drift(p, x, v);
        Vec bm = limiting_drift(p, x, mid);
        for (int i = 0; i < 2; ++i) CHECK(bm[i] == doctest::Approx(0.5 * (bu[i] + bv[i])).epsilon(1e-12));
    }
}

TEST_CASE("limiting_drift Lipschitz on a compact") {
    ModelParams p = ref_model();
    ControlMatrix u = tu::mat2(0.3, 0.4);
    RngStream s(CounterRng(14, 0));
    double cfit = 0.0;
    for (int t = 0; t < 200; ++t) {
        Vec x = tu::rand_box(s, 2, 3.0), y = tu::rand_box(s, 2, 3.0);
        double dx = tu::linf(x, y);
        if (dx < 1e-8) continue;
        cfit = std::max(cfit, tu::linf(limiting_drift(p, x, u), limiting_drift(p, y, u)) / dx);
    }
    CHECK(cfit > 0.0);
    for (int t = 0; t < 200; ++t) {
        Vec x = tu::rand_box(s, 2, 3.0), y = tu::rand_box(s, 2, 3.0);
        double dx = tu::linf(x, y);
        if (dx < 1e-8) continue;
        double c = tu::linf(limiting_drift(p, x, u), limiting_drift(p, y, u)) / dx;
        CHECK(c <= 2.0 * cfit + 1e-9);
    }
}

TEST_CASE("prelimit_drift coincides with the limit at equal coefficients") {
    ModelParams p = ref_model();
    ScaledSystemParams s;
    s.n = 1;
    s.lambda_n = p.lambda;
    s.mu_n = p.mu;
    s.gamma_n = p.gamma;
    s.ell_n = p.ell;
    RngStream rs(CounterRng(15, 0));
    for (int t = 0; t < 50; ++t) {
        Vec x = tu::rand_box(rs, 2, 5.0);
        ControlMatrix u = tu::mat2(rs.u(), rs.u());
        CHECK(prelimit_drift(s, x, u) == limiting_drift(p, x, u));
    }
    CHECK(prelimit_drift(s, {0.0, 0.0}, ControlMatrix(2)) == s.ell_n);
}

TEST_CASE("prelimit_drift converges to the limiting drift along the scaling sequence") {
    ModelParams p = ref_model();
    HatVectors hats;
    hats.lambda_hat = {-1.0, 0.0};
    hats.mu_hat = {0.5, -0.5};
    p.ell = {-1.5, 0.5};  // lambda_hat - mu_hat

    RngStream rs(CounterRng(16, 0));
    std::vector<Vec> xs;
    std::vector<ControlMatrix> us;
    for (int t = 0; t < 60; ++t) {
        xs.push_back(tu::rand_box(rs, 2, 5.0));
        us.push_back(tu::mat2(rs.u(), rs.u()));
    }
    double prev = 1e300;
    for (long long n : {100, 200, 400, 800}) {
        ScaledSystemParams s = scaling_sequence(p, hats, n);
        double gap = 0.0;
        for (size_t k = 0; k < xs.size(); ++k)
            gap = std::max(gap, tu::linf(prelimit_drift(s, xs[k], us[k]),
                                         limiting_drift(p, xs[k], us[k])));
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 0.2);  // ~ |mu_hat| * R / sqrt(800)
}

TEST_CASE("diffusion_coeff") {
    ModelParams p = ref_model();
    Vec s = diffusion_coeff(p);
    CHECK(s[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(s[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    p.lambda = {2.0, 0.5};
    Vec s2 = diffusion_coeff(p);
    CHECK(s2[0] == 2.0);
    CHECK(s2[1] == 1.0);
    for (int i = 0; i < 2; ++i)
        CHECK(s2[i] * s2[i] == doctest::Approx(2.0 * p.lambda[i]).epsilon(1e-15));
}

TEST_CASE("scaling_sequence worked values") {
    ModelParams p = tu::model_1d();
    HatVectors h0{{0.0}, {0.0}};
    ScaledSystemParams a = scaling_sequence(p, h0, 100);
    CHECK(a.lambda_n[0] == 100.0);
    CHECK(a.ell_n[0] == 0.0);

    HatVectors hm{{-1.0}, {0.0}};
    ScaledSystemParams b = scaling_sequence(p, hm, 100);
    CHECK(b.lambda_n[0] == 90.0);
    CHECK(b.ell_n[0] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("scaling_sequence ell_n matches lambda_hat - mu_hat at every n") {
    ModelParams p = ref_model();
    HatVectors hats{{-1.0, 0.25}, {0.5, -0.75}};
    p.ell = {-1.5, 1.0};
    for (long long n : {100LL, 10000LL, 1000000LL}) {
        ScaledSystemParams s = scaling_sequence(p, hats, n);
        for (int i = 0; i < 2; ++i) {
            double target = hats.lambda_hat[i] - hats.mu_hat[i];
            CHECK(std::fabs(s.ell_n[i] - target) <= 1e-8);
            // definition holds exactly
            double rn = std::sqrt(static_cast<double>(n));
            CHECK(s.ell_n[i] == (s.lambda_n[i] - s.mu_n[i][i] * n) / rn);
        }
    }
}

TEST_CASE("scaling_sequence rejections") {
    ModelParams p = tu::model_1d();
    CHECK_THROWS_AS(scaling_sequence(p, HatVectors{{-11.0}, {0.0}}, 100), ConfigError);
    CHECK_THROWS_AS(scaling_sequence(p, HatVectors{{0.0}, {0.0}}, 0), ConfigError);
    CHECK_THROWS_AS(scaling_sequence(p, HatVectors{{0.0, 0.0}, {0.0}}, 4), ConfigError);
    ModelParams bad = p;
    bad.lambda = {2.0};  // != mu diagonal
    CHECK_THROWS_AS(scaling_sequence(bad, HatVectors{{0.0}, {0.0}}, 4), ConfigError);
}

TEST_CASE("scaling_sequence respects the routing mask") {
    ModelParams p = ref_model();
    p.mask[0][1] = false;
    p.mu[0][1] = 0.0;  // keep params consistent with the mask
    ScaledSystemParams s = scaling_sequence(p, HatVectors{{-1.0, -1.0}, {0.0, 0.0}}, 64);
    CHECK(s.mu_n[0][1] == 0.0);
    CHECK(s.mu_n[1][0] == 0.6);
}

TEST_CASE("validate_model reports each violation") {
    ModelParams p = ref_model();
    CHECK(validate_model(p).empty());

    ModelParams bad = p;
    bad.lambda[0] = -1.0;
    bad.gamma[1] = 0.0;
    bad.mu[1][1] = 0.0;
    bad.mu[0][1] = -0.2;
    bad.mask[0][0] = true;
    auto errs = validate_model(bad);
    REQUIRE(errs.size() == 5);
    auto has = [&](const std::string& frag) {
        for (const auto& e : errs)
            if (e.find(frag) != std::string::npos) return true;
        return false;
    };
    CHECK(has("model.lambda[0]"));
    CHECK(has("model.gamma[1]"));
    CHECK(has("model.mu[1][1]"));
    CHECK(has("model.mu[0][1]"));
    CHECK(has("model.routing_mask[0][0]"));

    ModelParams short_mu = p;
    short_mu.mu.pop_back();
    CHECK(!validate_model(short_mu).empty());
}
