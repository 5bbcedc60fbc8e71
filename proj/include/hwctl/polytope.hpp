#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hwctl/cost.hpp"
#include "hwctl/model.hpp"

namespace hwctl {

// State-dependent feasible set M(x):
//   u >= 0, zero diagonal, masked entries zero,
//   column sums  sum_{k != i} u_ki <= 1            (pool i's surplus budget)
//   row dots     sum_{j != i} u_ij x_j^- <= x_i^+  (can't drain more than the queue)
// Nonempty (0 in M(x)), convex, compact.
struct FeasibilityContext {
    const ModelParams* params = nullptr;
    Vec x, xplus, xminus;
};

FeasibilityContext make_context(const ModelParams& p, const Vec& x);

// Membership with additive slack on every constraint.
bool contains(const FeasibilityContext& ctx, const ControlMatrix& u, double slack);

// Euclidean projection of u0 onto M(x) by cyclic Dykstra over three simple sets
// (box, column halfspaces, row halfspaces), followed by an exact feasibility
// cleanup. Deterministic.
ControlMatrix project_to_feasible(const FeasibilityContext& ctx, const ControlMatrix& u0,
                                  double tol = 1e-13, int max_cycles = 400);

// Holder repair: given u in M(y), produce u' in M(x) with
// |u_ij y_j^- - u'_ij x_j^-| <= theta1 * |x-y|^{1/2}. Requires theta > d.
// Rows whose large entries face vanishing queue mass are zeroed; all other
// entries shrink by theta*|x-y|^{1/2} (entries at or below the threshold drop
// to zero). Identity when x == y.
ControlMatrix repair_to(const ModelParams& p, const ControlMatrix& u, const Vec& y,
                        const Vec& x, double theta);

struct ArgminConfig {
    double epsilon = 1e-2;       // strong-convexity weight on ||u||^2
    double tol = 1e-10;          // stationarity tolerance (projected-gradient map)
    int max_iters = 2000;
    int restarts = 2;
    bool force_iterative = false;  // test hook: skip the exact linear-cost path
    double dykstra_tol = 1e-13;
    int dykstra_max_cycles = 400;
};

struct ArgminResult {
    ControlMatrix u;
    double value = 0.0;
    int iters = 0;
    bool converged = true;
};

// Objective p.b(x,u) + r(q^+(x,u)) + eps ||u||^2 evaluated directly.
double hamiltonian_objective(const ModelParams& mp, const CostSpec& cost,
                             const FeasibilityContext& ctx, const Vec& p,
                             const ControlMatrix& u, double eps);

// min over M(x) of the objective above, eps = cfg.epsilon > 0. The minimizer is
// unique (strict convexity); entries against coordinates with x_j^- = 0 are
// pinned to zero (they never lower the objective). Linear holding cost admits
// an exact one-projection solution; otherwise an accelerated projected-gradient
// loop runs from cfg.restarts distinct starts.
ArgminResult argmin_hamiltonian(const ModelParams& mp, const CostSpec& cost,
                                const FeasibilityContext& ctx, const Vec& p,
                                const ArgminConfig& cfg,
                                const ControlMatrix* warm = nullptr);

// Value-only wrapper for the eps-perturbed Hamiltonian.
double hamiltonian_H_eps(const ModelParams& mp, const CostSpec& cost,
                         const FeasibilityContext& ctx, const Vec& p,
                         const ArgminConfig& cfg, ControlMatrix* minimizer = nullptr);

// Unperturbed Hamiltonian. Linear cost and d <= 3: exact LP over the vertices
// of M(x) with lexicographically-smallest tie-breaking. Otherwise: decreasing
// epsilon ladder {1e-2,1e-3,1e-4} with early stop once successive values agree.
double hamiltonian_H(const ModelParams& mp, const CostSpec& cost,
                     const FeasibilityContext& ctx, const Vec& p,
                     const ArgminConfig& cfg, ControlMatrix* minimizer = nullptr);

// Independent oracle: exhaustive search over a uniform grid on the free
// coordinates of [0,1]^{d(d-1)}, feasibility-filtered. grid_points^#free is
// capped at 1e8 candidates. Enumeration order is lexicographic, ties keep the
// earlier candidate.
ArgminResult brute_force_argmin(const ModelParams& mp, const CostSpec& cost,
                                const FeasibilityContext& ctx, const Vec& p, double eps,
                                int grid_points);

// Deterministic extreme-ish + random feasible control matrices, used by probes
// that need sup over M(x) of an affine function. Always includes the zero
// matrix and greedy per-entry-maximal fills.
std::vector<ControlMatrix> feasible_candidates(const FeasibilityContext& ctx, int random_count,
                                               uint64_t seed);

// Vertices of M(x) restricted to the free coordinates (d <= 3 only; basis
// enumeration). Used by the LP path and by tests.
std::vector<ControlMatrix> polytope_vertices(const FeasibilityContext& ctx);

}  // namespace hwctl
