#pragma once

#include <string>
#include <vector>

#include "hwctl/config.hpp"

namespace hwctl {

struct ConvergenceRow {
    long long n = 0;
    double policy_cost = 0.0;
    double policy_ci = 0.0;
    double zero_cost = 0.0;
    double zero_ci = 0.0;
};

struct ConvergenceResult {
    double epsilon = 0.0;  // smallest ladder entry; that solve drives the policy
    double rho_star = 0.0;
    double rho_eps = 0.0;
    double diffusion_mean = 0.0;
    double diffusion_ci = 0.0;
    std::vector<ConvergenceRow> rows;
    bool ordering_ok = true;      // policy <= zero + CI at every n
    bool gap_monotone_ok = true;  // |policy - rho*| nonincreasing within CI
};

// The headline pipeline: (1) ergodic solves at the smallest epsilon and at
// epsilon = 0; (2) diffusion cross-check of rho_eps under the extracted
// policy; (3) for each n, pre-limit queue estimates under floor feedback and
// under zero help. Writes convergence.csv and summary.json into cfg.output
// as stages complete; a stage failure persists partials and rethrows with
// the stage name prefixed.
ConvergenceResult run_convergence(const ExperimentConfig& cfg);

}  // namespace hwctl
