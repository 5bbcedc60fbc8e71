#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "hwctl/config.hpp"
#include "hwctl/errors.hpp"
#include "hwctl/hjb.hpp"
#include "hwctl/io.hpp"
#include "test_util.hpp"

using namespace hwctl;

namespace {

bool mentions(const ConfigError& e, const std::string& frag) {
    for (const auto& v : e.violations)
        if (v.find(frag) != std::string::npos) return true;
    return false;
}

std::string tmpdir() {
    static int counter = 0;
    std::string dir = "/tmp/hwctl_test_io_" + std::to_string(counter++);
    return dir;
}

}  // namespace

TEST_CASE("reference config round-trips through serialize/parse") {
    ExperimentConfig ref = reference_config();
    ExperimentConfig back = parse_config(serialize_config(ref));
    CHECK(back == ref);
    // and the shipped file matches the built-in
    CHECK(load_config("configs/reference.json") == ref);
}

TEST_CASE("minimal d=1 config parses with defaults") {
    ExperimentConfig cfg = parse_config(R"({
        "model": {"d": 1, "lambda": [1], "mu": [[1]], "gamma": [1], "ell": [0]},
        "cost": {"h": [1], "m": [1]},
        "grid": {"L": 4, "h": 0.1}
    })");
    CHECK(cfg.model.d == 1);
    CHECK(cfg.epsilons == std::vector<double>{0.1, 0.03, 0.01});
    CHECK(cfg.alphas == std::vector<double>{0.2, 0.1, 0.05});
    CHECK(cfg.queue_n == std::vector<long long>{25, 100, 400});
    CHECK(cfg.solver.epsilon == 0.01);  // smallest ladder entry drives the solver
    CHECK(cfg.hats.lambda_hat == Vec{0.0});
    CHECK(cfg.hats.mu_hat == Vec{0.0});
    CHECK(cfg.model.mask[0][0] == false);
}

TEST_CASE("hats and ell consistency") {
    // hats only: ell is derived
    ExperimentConfig from_hats = parse_config(R"({
        "model": {"d": 1, "lambda": [1], "mu": [[1]], "gamma": [1]},
        "hats": {"lambda_hat": [-1], "mu_hat": [0.5]},
        "cost": {"h": [1], "m": [1]}, "grid": {"L": 4, "h": 0.1}
    })");
    CHECK(from_hats.model.ell == Vec{-1.5});

    // both, inconsistent
    CHECK_THROWS_WITH_AS(parse_config(R"({
        "model": {"d": 1, "lambda": [1], "mu": [[1]], "gamma": [1], "ell": [0]},
        "hats": {"lambda_hat": [-1], "mu_hat": [0.5]},
        "cost": {"h": [1], "m": [1]}, "grid": {"L": 4, "h": 0.1}
    })"),
                         doctest::Contains("model.ell[0]"), ConfigError);

    // neither
    try {
        parse_config(R"({
            "model": {"d": 1, "lambda": [1], "mu": [[1]], "gamma": [1]},
            "cost": {"h": [1], "m": [1]}, "grid": {"L": 4, "h": 0.1}
        })");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "model.ell"));
    }
}

TEST_CASE("violations carry json paths and all are reported") {
    try {
        parse_config(R"({
            "model": {"d": 2, "lambda": [1, 1], "mu": [[1, 0.6], [0.6, 1]],
                      "gamma": [-1, 1], "ell": [0, 0]},
            "cost": {"h": [1, 1], "m": [0.5, 1]},
            "grid": {"L": 4, "h": 0.3},
            "queue": {"n": [100, 25]}
        })");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "model.gamma[0]"));
        CHECK(mentions(e, "queue.n"));
        CHECK(mentions(e, "grid.h"));
        CHECK(mentions(e, "cost.m[0]"));
        CHECK(e.violations.size() >= 4);
    }

    CHECK_THROWS_AS(parse_config("not json at all"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1,2,3]"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/path.json"), ConfigError);

    try {
        parse_config(R"({
            "model": {"d": 1, "lambda": [1], "mu": [[1]], "gamma": [1], "ell": [0]},
            "cost": {"h": [1], "m": [1]}, "grid": {"L": 4, "h": 0.1},
            "solver": {"epsilons": [0.01, 0.1]},
            "sim": {"dt": 0.5}
        })");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "solver.epsilons[1]"));
        CHECK(mentions(e, "sim.dt"));
    }
}

TEST_CASE("fmt_double survives a parse round trip") {
    for (double v : {0.1, -1.0 / 3.0, 1e-17, 6.02e23, 0.0, 2.0, 0.05, 1.0 / std::sqrt(2.0)}) {
        std::string s = fmt_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("CsvWriter enforces the column contract") {
    std::string dir = tmpdir();
    CsvWriter w(dir + "/t.csv", {"a", "b"});
    w.row({"1", "2"});
    CHECK_THROWS_AS(w.row({"1"}), DiagnosticError);
    w.row({fmt_double(0.5), "x"});
    w.close();
    std::string body = read_text_file(dir + "/t.csv");
    CHECK(body == "a,b\n1,2\n0.5,x\n");
}

TEST_CASE("solution save/load/save is byte identical") {
    ExperimentConfig rc = reference_config();
    SolverConfig cfg;
    cfg.epsilon = 0.1;
    Grid g = Grid::make(2, 2.0, 0.5);
    SolutionBundle b;
    b.model = rc.model;
    b.cost = rc.cost;
    b.sol = solve_ergodic(rc.model, rc.cost, g, cfg);

    std::string dir = tmpdir(), dir2 = tmpdir();
    save_solution(b, dir, "sol");
    SolutionBundle l = load_solution(dir + "/sol.json");

    CHECK(l.sol.rho == b.sol.rho);
    CHECK(l.sol.epsilon == b.sol.epsilon);
    CHECK(l.sol.V == b.sol.V);
    CHECK(l.sol.policy == b.sol.policy);
    CHECK(l.model.lambda == b.model.lambda);
    CHECK(l.model.ell == b.model.ell);
    CHECK(l.cost.h == b.cost.h);

    // same stem, fresh directory: the files embed the stem, so byte equality
    // only makes sense stem-to-stem
    save_solution(l, dir2, "sol");
    CHECK(read_text_file(dir2 + "/sol.json") == read_text_file(dir + "/sol.json"));
    CHECK(read_text_file(dir2 + "/sol.csv") == read_text_file(dir + "/sol.csv"));

    // the re-derived gradient feeds the same policy extraction
    REQUIRE(l.sol.grad.size() == b.sol.grad.size());
    double dg = 0.0;
    for (size_t k = 0; k < l.sol.grad.size(); ++k)
        dg = std::max(dg, std::fabs(l.sol.grad[k] - b.sol.grad[k]));
    CHECK(dg <= 1e-12);

    CHECK_THROWS_AS(load_solution(dir + "/nothing.json"), ConfigError);
}

TEST_CASE("serialize_config is stable under a second round trip") {
    ExperimentConfig ref = reference_config();
    std::string once = serialize_config(ref);
    std::string twice = serialize_config(parse_config(once));
    CHECK(once == twice);
}
