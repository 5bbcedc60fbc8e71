#include <doctest.h>

#include <cmath>
#include <memory>

#include "hwctl/errors.hpp"
#include "hwctl/hjb.hpp"
#include "hwctl/policy.hpp"
#include "test_util.hpp"

using namespace hwctl;

namespace {

std::shared_ptr<const HjbSolution> solve_ref(double eps, double L, double h) {
    ModelParams p = tu::ref_model();
    CostSpec c = tu::ref_cost();
    SolverConfig cfg;
    cfg.epsilon = eps;
    auto sol = std::make_shared<HjbSolution>(solve_ergodic(p, c, Grid::make(2, L, h), cfg));
    return sol;
}

double frob_dist(const ControlMatrix& a, const ControlMatrix& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.a.size(); ++k) s += (a.a[k] - b.a[k]) * (a.a[k] - b.a[k]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("provenance and basic kinds") {
    ModelParams p = tu::ref_model();
    MarkovPolicy z = MarkovPolicy::zero(p);
    CHECK(z.provenance() == "zero");
    CHECK(z.kind() == MarkovPolicy::Kind::Zero);
    CHECK(control_cost(z.evaluate({-2.0, 1.0})) == 0.0);

    MarkovPolicy f = MarkovPolicy::fixed_projected(p, tu::mat2(0.8, 0.6));
    CHECK(f.provenance() == "fixed_matrix_projected");
    RngStream s(CounterRng(51, 0));
    for (int t = 0; t < 200; ++t) {
        Vec x = tu::rand_box(s, 2, 5.0);
        CHECK(contains(make_context(p, x), f.evaluate(x), 1e-9));
    }

    // projection is the identity when the matrix is already feasible
    ControlMatrix u = f.evaluate({3.0, -0.5});
    CHECK(u(0, 1) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(u(1, 0) == doctest::Approx(0.6).epsilon(1e-9));

    CHECK_THROWS_AS(MarkovPolicy::fixed_projected(p, ControlMatrix(3)), ConfigError);
    CHECK_THROWS_AS(MarkovPolicy::hjb_extracted(p, tu::ref_cost(), nullptr, ArgminConfig{}),
                    ConfigError);
}

TEST_CASE("hjb_extracted policy") {
    ModelParams p = tu::ref_model();
    CostSpec c = tu::ref_cost();
    auto sol = solve_ref(0.1, 4.0, 0.1);
    ArgminConfig am;
    am.epsilon = 0.1;
    MarkovPolicy pol = extract_policy(p, c, sol, am);
    CHECK(pol.provenance() == "hjb_extracted");
    CHECK(pol.epsilon() == 0.1);

    const Grid& g = sol->grid;

    SUBCASE("matches the stored field at the nodes") {
        for (long long k = 0; k < g.total; k += 97) {
            ControlMatrix at = pol.evaluate(g.coords(k));
            CHECK(frob_dist(at, sol->policy_at(k)) <= 1e-6);
        }
    }

    SUBCASE("zero when no pool has surplus") {
        RngStream s(CounterRng(52, 0));
        for (int t = 0; t < 100; ++t) {
            Vec x{0.05 + 3.0 * s.u(), 0.05 + 3.0 * s.u()};
            CHECK(control_cost(pol.evaluate(x)) <= 1e-18);
        }
    }

    SUBCASE("feasible at random interior points") {
        RngStream s(CounterRng(53, 0));
        for (int t = 0; t < 1000; ++t) {
            Vec x = tu::rand_box(s, 2, 3.9);
            CHECK(contains(make_context(p, x), pol.evaluate(x), 1e-9));
        }
    }

    SUBCASE("outside the box the gradient comes from the box projection") {
        Vec far{7.5, -9.0};
        ControlMatrix u_far = pol.evaluate(far);
        CHECK(contains(make_context(p, far), u_far, 1e-9));

        // the same argmin run by hand at the projected gradient agrees
        Vec clamped{4.0, -4.0};
        long long node = 0;
        {
            std::vector<int> idx(2);
            idx[0] = static_cast<int>(std::llround((clamped[0] + g.L) / g.h));
            idx[1] = static_cast<int>(std::llround((clamped[1] + g.L) / g.h));
            node = g.index(idx);
        }
        Vec grad = sol->grad_at(node);
        FeasibilityContext ctx = make_context(p, far);
        ControlMatrix direct = argmin_hamiltonian(p, c, ctx, grad, am).u;
        CHECK(frob_dist(u_far, direct) <= 1e-8);
    }

    SUBCASE("dimension mismatch is rejected") {
        CHECK_THROWS_AS(pol.evaluate({1.0}), ConfigError);
    }
}
