#include <doctest.h>

#include <cmath>

#include "hwctl/cost.hpp"
#include "hwctl/errors.hpp"
#include "hwctl/polytope.hpp"
#include "test_util.hpp"

using namespace hwctl;

TEST_CASE("running_cost worked values") {
    CostSpec lin{{1.0, 1.0}, {1.0, 1.0}};
    CHECK(running_cost(lin, {1.0, 2.0}) == 3.0);
    CHECK(running_cost(lin, {0.0, 0.0}) == 0.0);

    CostSpec mix{{1.0, 0.0}, {2.0, 1.0}};
    CHECK(running_cost(mix, {3.0, 5.0}) == 9.0);

    // negative components act through the positive part, matching r(q^+)
    CHECK(running_cost(lin, {-4.0, 2.0}) == 2.0);
}

TEST_CASE("perturbed_cost worked values") {
    CostSpec lin{{1.0, 1.0}, {1.0, 1.0}};
    Vec x{2.0, -1.0};
    ControlMatrix u = tu::mat2(1.0, 0.0);

    CHECK(perturbed_cost(lin, x, u, 0.0) == 1.0);   // q = (1, 0)
    CHECK(perturbed_cost(lin, x, u, 0.1) == doctest::Approx(1.1).epsilon(1e-14));
    CHECK(perturbed_cost(lin, x, ControlMatrix(2), 0.7) == 2.0);  // r(x^+), eps idle at u=0

    // infeasible u drives q1 < 0; the positive part clamps before r
    ControlMatrix over = tu::mat2(1.0, 0.0);
    Vec y{0.2, -1.0};
    CHECK(queue_map(y, over)[0] < 0.0);
    CHECK(perturbed_cost(lin, y, over, 0.0) == 0.0);
}

TEST_CASE("control_cost is the squared Frobenius norm") {
    ControlMatrix u = tu::mat2(0.5, 0.25);
    CHECK(control_cost(u) == doctest::Approx(0.3125).epsilon(1e-15));
    CHECK(control_cost(ControlMatrix(3)) == 0.0);
}

TEST_CASE("convexity of the control-composed cost on M(x)") {
    ModelParams p = tu::ref_model();
    CostSpec quad{{1.0, 0.5}, {2.0, 1.0}};
    RngStream s(CounterRng(21, 0));
    for (int t = 0; t < 150; ++t) {
        Vec x = tu::rand_box(s, 2, 5.0);
        FeasibilityContext ctx = make_context(p, x);
        auto cands = feasible_candidates(ctx, 4, 500 + t);
        const ControlMatrix &u = cands[cands.size() - 1], &v = cands[cands.size() - 2];
        ControlMatrix mid(2);
        for (size_t k = 0; k < mid.a.size(); ++k) mid.a[k] = 0.5 * (u.a[k] + v.a[k]);

        double lhs = perturbed_cost(quad, x, mid, 0.0);
        double rhs = 0.5 * (perturbed_cost(quad, x, u, 0.0) + perturbed_cost(quad, x, v, 0.0));
        CHECK(lhs <= rhs + 1e-12);

        // the eps term makes the midpoint gap at least (eps/4)||u - v||^2
        const double eps = 0.25;
        double du2 = 0.0;
        for (size_t k = 0; k < u.a.size(); ++k) du2 += (u.a[k] - v.a[k]) * (u.a[k] - v.a[k]);
        double lhs_e = perturbed_cost(quad, x, mid, eps);
        double rhs_e = 0.5 * (perturbed_cost(quad, x, u, eps) + perturbed_cost(quad, x, v, eps));
        CHECK(rhs_e - lhs_e >= 0.25 * eps * du2 - 1e-12);
    }
}

TEST_CASE("running_cost_gradient matches finite differences") {
    CostSpec c{{1.0, 0.7, 0.0}, {1.0, 2.0, 3.0}};
    RngStream s(CounterRng(22, 0));
    for (int t = 0; t < 50; ++t) {
        Vec q(3);
        for (int i = 0; i < 3; ++i) q[i] = 0.1 + 4.0 * s.u();
        Vec g = running_cost_gradient(c, q);
        const double dh = 1e-6;
        for (int i = 0; i < 3; ++i) {
            Vec qp = q, qm = q;
            qp[i] += dh;
            qm[i] -= dh;
            double fd = (running_cost(c, qp) - running_cost(c, qm)) / (2.0 * dh);
            CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
    // flat at the clamp
    CHECK(running_cost_gradient(c, {-1.0, -2.0, -3.0}) == Vec{0.0, 0.0, 0.0});
}

TEST_CASE("growth envelope") {
    CostSpec c{{1.0, 1.0}, {1.0, 2.0}};
    const double hmax = 1.0, mmax = 2.0;
    RngStream s(CounterRng(23, 0));
    for (int t = 0; t < 300; ++t) {
        Vec x(2);
        for (int i = 0; i < 2; ++i) x[i] = 10.0 * s.u();
        double nx = tu::norm2(x);
        CHECK(running_cost(c, x) <= hmax * 2.0 * (1.0 + std::pow(nx, mmax)) + 1e-12);
    }
}

TEST_CASE("validate_cost") {
    CostSpec ok{{1.0, 0.0}, {1.0, 2.0}};
    CHECK(validate_cost(ok, 2).empty());
    CHECK(validate_cost(ok, 2, "cost").empty());

    CostSpec zero{{0.0, 0.0}, {1.0, 1.0}};  // r == 0 is a legal degenerate cost
    CHECK(validate_cost(zero, 2).empty());

    CostSpec bad{{-1.0, 1.0}, {0.5, 1.0}};
    auto errs = validate_cost(bad, 2, "cost");
    REQUIRE(errs.size() == 2);
    CHECK(errs[0].find("cost.h[0]") != std::string::npos);
    CHECK(errs[1].find("cost.m[0]") != std::string::npos);

    CHECK(!validate_cost(ok, 3).empty());  // dimension mismatch
}
