#include "hwctl/hjb.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hwctl/errors.hpp"

namespace hwctl {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using EVec = Eigen::VectorXd;

// Mirror ghosts at the truncation faces: the missing neighbor folds back onto
// the inner one, which is the reflecting-boundary transition of the
// approximating chain (and a one-sided difference for the derivative terms).
inline long long up_id(const Grid& g, long long k, int i, int idx_i, long long s) {
    return idx_i == g.npts - 1 ? k - s : k + s;
}
inline long long dn_id(const Grid& g, long long k, int i, int idx_i, long long s) {
    return idx_i == 0 ? k + s : k - s;
}

ControlMatrix policy_from_flat(const Vec& field, int d, long long node) {
    ControlMatrix u(d);
    const double* src = field.data() + static_cast<size_t>(node) * d * d;
    std::copy(src, src + static_cast<size_t>(d) * d, u.a.begin());
    return u;
}

void policy_to_flat(Vec& field, int d, long long node, const ControlMatrix& u) {
    std::copy(u.a.begin(), u.a.end(), field.begin() + static_cast<size_t>(node) * d * d);
}

struct LinearBackend {
    Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> krylov;
    Eigen::SparseLU<SpMat> lu;
    bool lu_pattern_ready = false;

    EVec solve(const SpMat& M, const EVec& rhs, const EVec* guess, const SolverConfig& cfg,
               const char* what) {
        krylov.setTolerance(cfg.lin_tol);
        krylov.setMaxIterations(cfg.lin_maxit);
        krylov.compute(M);
        EVec w;
        if (guess && guess->size() == rhs.size())
            w = krylov.solveWithGuess(rhs, *guess);
        else
            w = krylov.solve(rhs);
        const double scale = std::max(1.0, rhs.norm());
        if (krylov.info() == Eigen::Success && (M * w - rhs).norm() <= 1e3 * cfg.lin_tol * scale)
            return w;
        // Deterministic direct fallback when the Krylov solve stalls.
        if (!lu_pattern_ready) {
            lu.analyzePattern(M);
            lu_pattern_ready = true;
        }
        lu.factorize(M);
        if (lu.info() != Eigen::Success)
            throw SolverError(std::string(what) + ": linear solve failed (singular system?)");
        w = lu.solve(rhs);
        if ((M * w - rhs).norm() > 1e-6 * scale)
            throw SolverError(std::string(what) + ": direct fallback left a large residual");
        return w;
    }
};

// Assemble rho - (L^u V) = r  (ergodic; V(origin) eliminated, rho in its slot)
// or (alpha - L^u) V = r (discounted).
void assemble(const ModelParams& p, const CostSpec& c, const Grid& g, const Vec& pol,
              double eps, double alpha, bool ergodic, SpMat& M, EVec& rhs) {
    const long long origin = g.origin();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(g.total) * (2 * g.d + 2));
    rhs.resize(g.total);
    std::vector<int> idx(g.d);
    std::vector<long long> strides(g.d);
    for (int i = 0; i < g.d; ++i) strides[i] = g.stride(i);
    for (long long k = 0; k < g.total; ++k) {
        g.unpack(k, idx);
        Vec x(g.d);
        for (int i = 0; i < g.d; ++i) x[i] = -g.L + idx[i] * g.h;
        ControlMatrix u = policy_from_flat(pol, g.d, k);
        Vec b = limiting_drift(p, x, u);
        double diag = 0.0;
        for (int i = 0; i < g.d; ++i) {
            const double a2 = p.lambda[i] / (g.h * g.h);  // a_ii / (2 h^2)
            const double rup = a2 + pos(b[i]) / g.h;
            const double rdn = a2 + neg(b[i]) / g.h;
            const long long ku = up_id(g, k, i, idx[i], strides[i]);
            const long long kd = dn_id(g, k, i, idx[i], strides[i]);
            diag += rup + rdn;
            if (!ergodic || ku != origin) trip.emplace_back(k, ku, -rup);
            if (!ergodic || kd != origin) trip.emplace_back(k, kd, -rdn);
        }
        if (ergodic) {
            if (k != origin) trip.emplace_back(k, k, diag);
            trip.emplace_back(k, origin, 1.0);  // rho column
        } else {
            trip.emplace_back(k, k, diag + alpha);
        }
        rhs[k] = perturbed_cost(c, x, u, eps);
    }
    M.resize(g.total, g.total);
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
}

struct SweepOut {
    double resid = 0.0;
    double change = 0.0;
};

// One policy-improvement pass. Per node: upwind gradient at the current drift
// sign, argmin over M(x), one stencil re-evaluation if the minimizing drift
// flips a sign, Bellman residual bookkeeping. Pure per node, so the OpenMP
// and serial paths produce identical bits.
SweepOut improve(const ModelParams& p, const CostSpec& c, const Grid& g, const Vec& V,
                 double rho, double alpha, bool ergodic, const Vec& pol_old,
                 const SolverConfig& cfg, Vec& pol_new, Vec& grad_out, Vec& bell_out) {
    const int d = g.d;
    std::vector<long long> strides(d);
    for (int i = 0; i < d; ++i) strides[i] = g.stride(i);
    double resid = 0.0, change = 0.0;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : resid, change) if (cfg.parallel)
#endif
    for (long long k = 0; k < g.total; ++k) {
        std::vector<int> idx(d);
        g.unpack(k, idx);
        Vec x(d), DF(d), DB(d), pvec(d);
        for (int i = 0; i < d; ++i) x[i] = -g.L + idx[i] * g.h;
        const double V0 = V[k];
        double diff_term = 0.0;
        for (int i = 0; i < d; ++i) {
            const double Vu = V[up_id(g, k, i, idx[i], strides[i])];
            const double Vd = V[dn_id(g, k, i, idx[i], strides[i])];
            DF[i] = (Vu - V0) / g.h;
            DB[i] = (V0 - Vd) / g.h;
            diff_term += p.lambda[i] / (g.h * g.h) * (Vu - 2.0 * V0 + Vd);
        }
        FeasibilityContext ctx = make_context(p, x);
        ControlMatrix u_old = policy_from_flat(pol_old, d, k);
        Vec b = limiting_drift(p, x, u_old);
        for (int i = 0; i < d; ++i) pvec[i] = b[i] >= 0.0 ? DF[i] : DB[i];

        ControlMatrix u_new(d);
        double m = 0.0;
        auto minimize = [&](ControlMatrix& out) {
            if (cfg.epsilon > 0.0) {
                ArgminConfig ac = cfg.argmin;
                ac.epsilon = cfg.epsilon;
                ArgminResult r = argmin_hamiltonian(p, c, ctx, pvec, ac, &u_old);
                out = r.u;
                return r.value;
            }
            ControlMatrix mu;
            double v = hamiltonian_H(p, c, ctx, pvec, cfg.argmin, &mu);
            out = mu;
            return v;
        };
        m = minimize(u_new);
        Vec b_new = limiting_drift(p, x, u_new);
        bool flip = false;
        for (int i = 0; i < d; ++i)
            if ((b_new[i] >= 0.0) != (b[i] >= 0.0)) flip = true;
        if (flip) {
            for (int i = 0; i < d; ++i) pvec[i] = b_new[i] >= 0.0 ? DF[i] : DB[i];
            m = minimize(u_new);
        }
        const double target = ergodic ? rho : alpha * V0;
        bell_out[k] = diff_term + m - target;
        resid = std::max(resid, std::fabs(bell_out[k]));
        change = std::max(change, u_new.max_abs_diff(u_old));
        policy_to_flat(pol_new, d, k, u_new);
        for (int i = 0; i < d; ++i) grad_out[static_cast<size_t>(k) * d + i] = pvec[i];
    }
    return {resid, change};
}

HjbSolution solve_impl(const ModelParams& p, const CostSpec& c, const Grid& g, double alpha,
                       bool ergodic, const SolverConfig& cfg, const Vec* initial_policy) {
    if (g.total > cfg.max_nodes)
        throw CapacityError("hjb: grid exceeds configured node cap");
    if (ergodic && g.d > 3)
        throw CapacityError("hjb: ergodic solves are limited to d <= 3");
    {
        auto bad = validate_model(p);
        auto bad2 = validate_cost(c, p.d);
        bad.insert(bad.end(), bad2.begin(), bad2.end());
        if (!bad.empty()) throw ConfigError(bad);
    }
    if (cfg.epsilon < 0.0) throw ConfigError("hjb: epsilon must be >= 0");
    if (!ergodic && !(alpha > 0.0)) throw ConfigError("hjb: discount alpha must be > 0");

    const size_t psz = static_cast<size_t>(g.total) * g.d * g.d;
    Vec pol(psz, 0.0);
    if (initial_policy) {
        if (initial_policy->size() != psz)
            throw ConfigError("hjb: initial policy field has wrong size");
        pol = *initial_policy;
    }
    Vec pol_new(psz, 0.0);
    Vec grad(static_cast<size_t>(g.total) * g.d, 0.0);
    Vec bell(g.total, 0.0);

    LinearBackend lin;
    SpMat M;
    EVec rhs, w;
    std::vector<double> history;

    auto evaluate = [&](const Vec& field) {
        assemble(p, c, g, field, cfg.epsilon, alpha, ergodic, M, rhs);
        w = lin.solve(M, rhs, w.size() == g.total ? &w : nullptr, cfg,
                      ergodic ? "ergodic evaluation" : "discounted evaluation");
    };

    HjbSolution sol;
    sol.grid = g;
    sol.epsilon = cfg.epsilon;
    sol.alpha = ergodic ? 0.0 : alpha;

    evaluate(pol);
    for (int outer = 0; outer < cfg.max_policy_iters; ++outer) {
        Vec V(g.total);
        double rho = 0.0;
        if (ergodic) {
            const long long origin = g.origin();
            for (long long k = 0; k < g.total; ++k) V[k] = k == origin ? 0.0 : w[k];
            rho = w[origin];
        } else {
            for (long long k = 0; k < g.total; ++k) V[k] = w[k];
        }
        history.push_back(ergodic ? rho : alpha * V[g.origin()]);

        SweepOut sw = improve(p, c, g, V, rho, alpha, ergodic, pol, cfg, pol_new, grad, bell);
        if (sw.resid <= cfg.tol_pde || sw.change <= cfg.tol_policy) {
            sol.rho = rho;
            sol.V = std::move(V);
            sol.grad = std::move(grad);
            sol.policy = pol_new;
            sol.bell = std::move(bell);
            sol.residual = sw.resid;
            sol.iterations = outer + 1;
            sol.rho_history = std::move(history);
            return sol;
        }
        std::swap(pol, pol_new);
        evaluate(pol);
    }
    throw SolverError("hjb: policy iteration did not converge within " +
                          std::to_string(cfg.max_policy_iters) + " iterations",
                      history);
}

}  // namespace

ControlMatrix HjbSolution::policy_at(long long node) const {
    return policy_from_flat(policy, grid.d, node);
}

Vec HjbSolution::grad_at(long long node) const {
    Vec p(grid.d);
    for (int i = 0; i < grid.d; ++i) p[i] = grad[static_cast<size_t>(node) * grid.d + i];
    return p;
}

double apply_generator(const ModelParams& p, const Grid& g, const Vec& V, long long node,
                       const ControlMatrix& u) {
    std::vector<int> idx(g.d);
    g.unpack(node, idx);
    Vec x = g.coords(node);
    Vec b = limiting_drift(p, x, u);
    double s = 0.0;
    for (int i = 0; i < g.d; ++i) {
        const long long st = g.stride(i);
        const double Vu = V[up_id(g, node, i, idx[i], st)];
        const double Vd = V[dn_id(g, node, i, idx[i], st)];
        const double V0 = V[node];
        s += p.lambda[i] / (g.h * g.h) * (Vu - 2.0 * V0 + Vd);
        s += pos(b[i]) / g.h * (Vu - V0) - neg(b[i]) / g.h * (V0 - Vd);
    }
    return s;
}

std::pair<double, Vec> evaluate_policy_ergodic(const ModelParams& p, const CostSpec& c,
                                               const Grid& g, const Vec& policy_field,
                                               const SolverConfig& cfg) {
    SpMat M;
    EVec rhs;
    assemble(p, c, g, policy_field, cfg.epsilon, 0.0, true, M, rhs);
    LinearBackend lin;
    EVec w = lin.solve(M, rhs, nullptr, cfg, "policy evaluation");
    const long long origin = g.origin();
    Vec V(g.total);
    for (long long k = 0; k < g.total; ++k) V[k] = k == origin ? 0.0 : w[k];
    return {w[origin], std::move(V)};
}

HjbSolution solve_ergodic(const ModelParams& p, const CostSpec& c, const Grid& g,
                          const SolverConfig& cfg, const Vec* initial_policy) {
    return solve_impl(p, c, g, 0.0, true, cfg, initial_policy);
}

HjbSolution solve_discounted(const ModelParams& p, const CostSpec& c, const Grid& g,
                             double alpha, const SolverConfig& cfg) {
    return solve_impl(p, c, g, alpha, false, cfg, nullptr);
}

SweepResult epsilon_sweep(const ModelParams& p, const CostSpec& c, const Grid& g,
                          const SolverConfig& cfg, const std::vector<double>& eps_list) {
    if (eps_list.empty()) throw ConfigError("epsilon_sweep: empty epsilon list");
    for (size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw ConfigError("epsilon_sweep: epsilons must be > 0 (the terminal 0 is implicit)");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw ConfigError("epsilon_sweep: epsilons must be strictly decreasing");
    }
    SweepResult out;
    out.solutions.reserve(eps_list.size() + 1);
    const Vec* warm = nullptr;
    for (size_t i = 0; i <= eps_list.size(); ++i) {
        SolverConfig sc = cfg;
        sc.epsilon = i < eps_list.size() ? eps_list[i] : 0.0;
        HjbSolution sol = solve_ergodic(p, c, g, sc, warm);
        out.epsilons.push_back(sc.epsilon);
        out.rho.push_back(sol.rho);
        out.solutions.push_back(std::move(sol));
        warm = &out.solutions.back().policy;
    }
    for (size_t i = 1; i < out.rho.size(); ++i)
        if (out.rho[i] > out.rho[i - 1] + 1e-8)
            throw DiagnosticError("epsilon_sweep: gain failed to decrease along the ladder (" +
                                  std::to_string(out.rho[i - 1]) + " -> " +
                                  std::to_string(out.rho[i]) + ")");
    return out;
}

}  // namespace hwctl
