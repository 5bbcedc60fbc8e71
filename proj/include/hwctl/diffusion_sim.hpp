#pragma once

#include <cstdint>

#include "hwctl/policy.hpp"

namespace hwctl {

struct SimConfig {
    double T = 2e4;
    double dt = 1e-3;
    double burn_in = 1e3;
    int replications = 16;
    uint64_t seed = 1;
    bool parallel = true;
    double audit_fraction = 0.01;  // feasibility spot-check rate along the path
    double moment_k = 2.0;        // records time-averages of |X|^2 and |X|^k
};

struct PathSummary {
    double avg_cost = 0.0;  // time-average of r(q^+) + eps ||u||^2 after burn-in
    double avg_m2 = 0.0;    // time-average |X|^2 (after burn-in)
    double avg_mk = 0.0;    // time-average |X|^moment_k
    Vec final_state;
    uint64_t steps = 0;
    int audited = 0;
};

struct CostEstimate {
    double mean = 0.0;
    double ci_halfwidth = 0.0;  // 95% normal approximation
    std::vector<PathSummary> reps;
};

// Euler-Maruyama under a stationary Markov policy. Left-endpoint quadrature
// for the running cost; replication r draws from the counter stream
// (cfg.seed, r) with per-step, per-coordinate substreams. eps weights the
// control cost so estimates line up with the eps-perturbed gain.
PathSummary simulate_path(const ModelParams& p, const CostSpec& c, const MarkovPolicy& pol,
                          const Vec& x0, const SimConfig& cfg, int replication, double eps);

// Replications in parallel (OpenMP), combined in replication order so results
// do not depend on thread count.
CostEstimate estimate_ergodic_cost(const ModelParams& p, const CostSpec& c,
                                   const MarkovPolicy& pol, const Vec& x0, const SimConfig& cfg,
                                   double eps);

// Radial test function V(x) = chi(|x|^2): |x|^k outside the unit ball, C^2
// polynomial junction inside.
struct LyapunovSpec {
    double k = 2.0;
    double R_fit = 4.0;   // envelope fitted on |x| <= R_fit
    double R_test = 6.0;  // bound checked on R_fit < |x| <= R_test
    int shells = 10;
    int per_shell = 24;
    int random_controls = 12;
};

struct LyapunovFit {
    double c5 = 0.0;
    double c6 = 0.0;     // must come out > 0 for the drift bound to close
    int fit_samples = 0;
    int test_samples = 0;
    int violations = 0;  // test-shell exceedances of c5 - c6 |x|^k
    double worst_gap = 0.0;
};

double lyapunov_value(const LyapunovSpec& spec, const Vec& x);
// sup over candidate controls of L^u V at x, exact for d <= 3 (vertex set).
double lyapunov_generator_sup(const ModelParams& p, const LyapunovSpec& spec, const Vec& x,
                              int random_controls, uint64_t seed);
LyapunovFit lyapunov_probe(const ModelParams& p, const LyapunovSpec& spec, uint64_t seed);

}  // namespace hwctl
