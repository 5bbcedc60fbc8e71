#pragma once

#include <optional>
#include <vector>

#include "hwctl/cost.hpp"
#include "hwctl/grid.hpp"
#include "hwctl/model.hpp"
#include "hwctl/polytope.hpp"

namespace hwctl {

struct SolverConfig {
    double epsilon = 1e-2;   // control-cost perturbation; 0 selects the exact path
    double tol_pde = 1e-9;   // max Bellman residual at convergence
    double tol_policy = 1e-10;
    int max_policy_iters = 120;
    double lin_tol = 1e-12;  // relative tolerance of the policy-evaluation solve
    int lin_maxit = 40000;
    ArgminConfig argmin;
    bool parallel = true;    // improvement sweep via OpenMP (bitwise == serial)
    long long max_nodes = 8000000;
};

// Flat node-major fields: V[total], grad[total*d], policy[total*d*d].
struct HjbSolution {
    Grid grid;
    double epsilon = 0.0;
    double alpha = 0.0;      // discount rate; 0 marks an ergodic solution
    double rho = 0.0;        // ergodic gain (unused when alpha > 0)
    Vec V;
    Vec grad;
    Vec policy;
    Vec bell;                // per-node Bellman residual at termination
    double residual = 0.0;   // max |bell|
    int iterations = 0;
    std::vector<double> rho_history;

    ControlMatrix policy_at(long long node) const;
    Vec grad_at(long long node) const;
};

// One row of the monotone upwind discretization applied to a value field:
// (L^u V)(node) with central second differences, drift-upwinded first
// differences, and mirror ghosts at the truncation boundary (reflection).
double apply_generator(const ModelParams& p, const Grid& g, const Vec& V, long long node,
                       const ControlMatrix& u);

// Policy evaluation only: solve rho - (L^u V) = r_eps(., u), V(origin) = 0 for
// a fixed policy field. Returns (rho, V).
std::pair<double, Vec> evaluate_policy_ergodic(const ModelParams& p, const CostSpec& c,
                                               const Grid& g, const Vec& policy_field,
                                               const SolverConfig& cfg);

// Relative policy iteration for the ergodic equation
//   min_u { L^u V + r_eps(x,u) } = rho,  V(0) = 0.
HjbSolution solve_ergodic(const ModelParams& p, const CostSpec& c, const Grid& g,
                          const SolverConfig& cfg,
                          const Vec* initial_policy = nullptr);

// Policy iteration for the discounted equation
//   min_u { L^u V + r_eps(x,u) } = alpha V.
HjbSolution solve_discounted(const ModelParams& p, const CostSpec& c, const Grid& g,
                             double alpha, const SolverConfig& cfg);

struct SweepResult {
    std::vector<double> epsilons;  // includes the terminal 0
    std::vector<HjbSolution> solutions;
    std::vector<double> rho;
};

// Ergodic solves along a strictly decreasing epsilon ladder followed by the
// exact eps = 0 solve, warm-starting each from the previous policy. Checks
// rho monotonicity (tolerance 1e-8) and the eps*d sandwich.
SweepResult epsilon_sweep(const ModelParams& p, const CostSpec& c, const Grid& g,
                          const SolverConfig& cfg, const std::vector<double>& eps_list);

}  // namespace hwctl
