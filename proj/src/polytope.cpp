#include "hwctl/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "hwctl/errors.hpp"
#include "hwctl/rng.hpp"

namespace hwctl {

namespace {

// Free coordinates of the control matrix at a given state. pin_zero_queue
// additionally drops entries facing x_j^- = 0 (optimal controls never use
// them; dropping keeps the strongly-convex solve exact on the reduced space).
struct FreeSet {
    int d = 0;
    std::vector<std::pair<int, int>> e;   // (row class i, col pool j)
    std::vector<std::vector<int>> by_row; // indices into e per class i
    std::vector<std::vector<int>> by_col; // indices into e per pool j
};

FreeSet make_free(const FeasibilityContext& ctx, bool pin_zero_queue) {
    const ModelParams& p = *ctx.params;
    FreeSet fs;
    fs.d = p.d;
    fs.by_row.resize(p.d);
    fs.by_col.resize(p.d);
    for (int i = 0; i < p.d; ++i)
        for (int j = 0; j < p.d; ++j) {
            if (!p.help_allowed(i, j)) continue;
            if (pin_zero_queue && ctx.xminus[j] == 0.0) continue;
            int k = static_cast<int>(fs.e.size());
            fs.e.emplace_back(i, j);
            fs.by_row[i].push_back(k);
            fs.by_col[j].push_back(k);
        }
    return fs;
}

void scatter(const FreeSet& fs, const std::vector<double>& t, ControlMatrix& u) {
    std::fill(u.a.begin(), u.a.end(), 0.0);
    for (size_t k = 0; k < fs.e.size(); ++k) u(fs.e[k].first, fs.e[k].second) = t[k];
}

std::vector<double> gather(const FreeSet& fs, const ControlMatrix& u) {
    std::vector<double> t(fs.e.size());
    for (size_t k = 0; k < fs.e.size(); ++k) t[k] = u(fs.e[k].first, fs.e[k].second);
    return t;
}

// Cyclic Dykstra over box / column halfspaces / row halfspaces, in the free
// coordinates. Exact-feasibility cleanup at the end so callers can rely on
// contains(.., 1e-9) without slack games.
struct Projector {
    const FeasibilityContext* ctx;
    FreeSet fs;
    double tol;
    int max_cycles;

    Projector(const FeasibilityContext& c, bool pin_zero_queue, double tol_, int max_cycles_)
        : ctx(&c), fs(make_free(c, pin_zero_queue)), tol(tol_), max_cycles(max_cycles_) {}

    void box(std::vector<double>& t) const {
        for (double& v : t) v = std::min(1.0, std::max(0.0, v));
    }
    void cols(std::vector<double>& t) const {
        for (int j = 0; j < fs.d; ++j) {
            const auto& g = fs.by_col[j];
            if (g.empty()) continue;
            double s = 0.0;
            for (int k : g) s += t[k];
            if (s > 1.0) {
                double corr = (s - 1.0) / static_cast<double>(g.size());
                for (int k : g) t[k] -= corr;
            }
        }
    }
    void rows(std::vector<double>& t) const {
        for (int i = 0; i < fs.d; ++i) {
            const auto& g = fs.by_row[i];
            if (g.empty()) continue;
            double s = 0.0, w2 = 0.0;
            for (int k : g) {
                double w = ctx->xminus[fs.e[k].second];
                s += w * t[k];
                w2 += w * w;
            }
            if (w2 == 0.0) continue;
            if (s > ctx->xplus[i]) {
                double corr = (s - ctx->xplus[i]) / w2;
                for (int k : g) t[k] -= corr * ctx->xminus[fs.e[k].second];
            }
        }
    }

    std::vector<double> project(std::vector<double> t) const {
        const size_t F = t.size();
        if (F == 0) return t;
        std::vector<double> p1(F, 0.0), p2(F, 0.0), p3(F, 0.0), prev(F);
        for (int cycle = 0; cycle < max_cycles; ++cycle) {
            prev = t;
            for (size_t k = 0; k < F; ++k) t[k] += p1[k];
            { std::vector<double> y = t; box(t); for (size_t k = 0; k < F; ++k) p1[k] = y[k] - t[k]; }
            for (size_t k = 0; k < F; ++k) t[k] += p2[k];
            { std::vector<double> y = t; cols(t); for (size_t k = 0; k < F; ++k) p2[k] = y[k] - t[k]; }
            for (size_t k = 0; k < F; ++k) t[k] += p3[k];
            { std::vector<double> y = t; rows(t); for (size_t k = 0; k < F; ++k) p3[k] = y[k] - t[k]; }
            double delta = 0.0;
            for (size_t k = 0; k < F; ++k) delta = std::max(delta, std::fabs(t[k] - prev[k]));
            if (delta <= tol) break;
        }
        cleanup(t);
        return t;
    }

    // Clamp + minimal downscaling; guarantees exact membership.
    void cleanup(std::vector<double>& t) const {
        box(t);
        for (int j = 0; j < fs.d; ++j) {
            const auto& g = fs.by_col[j];
            if (g.empty()) continue;
            double s = 0.0;
            for (int k : g) s += t[k];
            if (s > 1.0)
                for (int k : g) t[k] /= s;
        }
        for (int i = 0; i < fs.d; ++i) {
            const auto& g = fs.by_row[i];
            if (g.empty()) continue;
            double s = 0.0;
            for (int k : g) s += ctx->xminus[fs.e[k].second] * t[k];
            if (s > ctx->xplus[i]) {
                double f = ctx->xplus[i] / s;  // s > x+ >= 0 so s > 0
                for (int k : g) t[k] *= f;
            }
        }
    }
};

}  // namespace

FeasibilityContext make_context(const ModelParams& p, const Vec& x) {
    if (static_cast<int>(x.size()) != p.d)
        throw ConfigError("make_context: state dimension " + std::to_string(x.size()) +
                          " != d=" + std::to_string(p.d));
    FeasibilityContext ctx;
    ctx.params = &p;
    ctx.x = x;
    ctx.xplus.resize(p.d);
    ctx.xminus.resize(p.d);
    for (int i = 0; i < p.d; ++i) {
        if (!std::isfinite(x[i])) throw ConfigError("make_context: non-finite state coordinate");
        ctx.xplus[i] = pos(x[i]);
        ctx.xminus[i] = neg(x[i]);
    }
    return ctx;
}

bool contains(const FeasibilityContext& ctx, const ControlMatrix& u, double slack) {
    if (slack < 0.0) throw ConfigError("contains: slack must be >= 0");
    const ModelParams& p = *ctx.params;
    if (u.d != p.d) return false;
    for (int i = 0; i < p.d; ++i) {
        if (std::fabs(u(i, i)) > slack) return false;
        double col = 0.0, row = 0.0;
        for (int k = 0; k < p.d; ++k) {
            if (k == i) continue;
            double vki = u(k, i);
            if (!std::isfinite(vki)) return false;
            if (vki < -slack || vki > 1.0 + slack) return false;
            if (!p.help_allowed(k, i) && std::fabs(vki) > slack) return false;
            col += vki;
            row += u(i, k) * ctx.xminus[k];
        }
        if (col > 1.0 + slack) return false;
        if (row > ctx.xplus[i] + slack) return false;
    }
    return true;
}

ControlMatrix project_to_feasible(const FeasibilityContext& ctx, const ControlMatrix& u0,
                                  double tol, int max_cycles) {
    Projector pr(ctx, /*pin_zero_queue=*/false, tol, max_cycles);
    std::vector<double> t = pr.project(gather(pr.fs, u0));
    ControlMatrix u(ctx.params->d);
    scatter(pr.fs, t, u);
    return u;
}

ControlMatrix repair_to(const ModelParams& p, const ControlMatrix& u, const Vec& y,
                        const Vec& x, double theta) {
    if (!(theta > static_cast<double>(p.d)))
        throw ConfigError("repair_to: theta must exceed d");
    FeasibilityContext cy = make_context(p, y);
    if (!contains(cy, u, 1e-9))
        throw DiagnosticError("repair_to: input control is not feasible at the source state");
    double dist2 = 0.0;
    for (int i = 0; i < p.d; ++i) dist2 += (x[i] - y[i]) * (x[i] - y[i]);
    const double dist = std::sqrt(dist2);
    if (dist == 0.0) return u;
    const double delta = std::sqrt(dist);   // |x-y|^{1/2}
    const double thr = theta * delta;
    ControlMatrix out(p.d);
    for (int i = 0; i < p.d; ++i) {
        double heavy_mass = 0.0;  // queue mass faced by the large entries of row i
        for (int j = 0; j < p.d; ++j)
            if (j != i && u(i, j) > thr) heavy_mass += cy.xminus[j];
        if (heavy_mass <= delta) continue;  // row zeroed
        for (int j = 0; j < p.d; ++j) {
            if (j == i) continue;
            double v = u(i, j);
            out(i, j) = v > thr ? v - thr : 0.0;
        }
    }
    FeasibilityContext cx = make_context(p, x);
    if (!contains(cx, out, 1e-9))
        throw DiagnosticError("repair_to: construction left the target feasible set (theta too small?)");
    return out;
}

double hamiltonian_objective(const ModelParams& mp, const CostSpec& cost,
                             const FeasibilityContext& ctx, const Vec& p,
                             const ControlMatrix& u, double eps) {
    Vec b = limiting_drift(mp, ctx.x, u);
    double v = 0.0;
    for (int i = 0; i < mp.d; ++i) v += p[i] * b[i];
    v += running_cost(cost, queue_map(ctx.x, u));
    if (eps != 0.0) v += eps * control_cost(u);
    return v;
}

namespace {

// Cached affine/convex decomposition of the objective in the free coordinates:
//   g(t) = C0 + lin.t + r(q^+(t)) + eps ||t||^2,  q_i(t) = x_i^+ - sum_row w t.
struct Objective {
    const FeasibilityContext* ctx;
    const CostSpec* cost;
    const FreeSet* fs;
    double eps;
    double C0 = 0.0;
    std::vector<double> lin, w;  // per free entry
    mutable Vec q, rg;           // scratch

    Objective(const ModelParams& mp, const CostSpec& c, const FeasibilityContext& cx,
              const Vec& p, const FreeSet& f, double eps_)
        : ctx(&cx), cost(&c), fs(&f), eps(eps_) {
        ControlMatrix z(mp.d);
        Vec b0 = limiting_drift(mp, cx.x, z);
        for (int i = 0; i < mp.d; ++i) C0 += p[i] * b0[i];
        lin.resize(fs->e.size());
        w.resize(fs->e.size());
        for (size_t k = 0; k < fs->e.size(); ++k) {
            auto [i, j] = fs->e[k];
            w[k] = cx.xminus[j];
            lin[k] = p[i] * (mp.gamma[i] - mp.mu[i][j]) * w[k];
        }
        q.resize(mp.d);
        rg.resize(mp.d);
    }

    void queues(const std::vector<double>& t) const {
        for (int i = 0; i < fs->d; ++i) {
            double s = ctx->xplus[i];
            for (int k : fs->by_row[i]) s -= w[k] * t[k];
            q[i] = s;
        }
    }

    double eval(const std::vector<double>& t) const {
        queues(t);
        double v = C0 + running_cost(*cost, q);
        for (size_t k = 0; k < t.size(); ++k) v += lin[k] * t[k] + eps * t[k] * t[k];
        return v;
    }

    void grad(const std::vector<double>& t, std::vector<double>& g) const {
        queues(t);
        rg = running_cost_gradient(*cost, q);
        for (size_t k = 0; k < t.size(); ++k) {
            auto [i, j] = fs->e[k];
            (void)j;
            g[k] = lin[k] - rg[i] * w[k] + 2.0 * eps * t[k];
        }
    }
};

// Monotone FISTA with backtracking; strong convexity (eps > 0) makes the
// minimizer unique, so all starts agree at convergence.
std::vector<double> mfista(const Objective& ob, const Projector& pr, std::vector<double> t,
                           const ArgminConfig& cfg, bool& converged, int& iters) {
    const size_t F = t.size();
    t = pr.project(std::move(t));
    if (F == 0) { converged = true; iters = 0; return t; }
    std::vector<double> y = t, g(F), z(F), tb = t;
    double fb = ob.eval(t);
    double L = 2.0 * cfg.epsilon + 1.0;
    double th = 1.0;
    converged = false;
    for (iters = 1; iters <= cfg.max_iters; ++iters) {
        ob.grad(y, g);
        double fy = ob.eval(y);
        for (int bt = 0; bt < 60; ++bt) {
            for (size_t k = 0; k < F; ++k) z[k] = y[k] - g[k] / L;
            z = pr.project(std::move(z));
            double q = fy, nrm2 = 0.0;
            for (size_t k = 0; k < F; ++k) {
                double dz = z[k] - y[k];
                q += g[k] * dz;
                nrm2 += dz * dz;
            }
            if (ob.eval(z) <= q + 0.5 * L * nrm2 + 1e-15) break;
            L *= 2.0;
        }
        double fz = ob.eval(z);
        std::vector<double> tn = fz <= fb ? z : tb;  // monotone pick
        if (fz <= fb) { fb = fz; tb = z; }
        double thn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * th * th));
        for (size_t k = 0; k < F; ++k)
            y[k] = tn[k] + (th / thn) * (z[k] - tn[k]) + ((th - 1.0) / thn) * (tn[k] - t[k]);
        double step = 0.0;
        for (size_t k = 0; k < F; ++k) step = std::max(step, std::fabs(tn[k] - t[k]));
        t = std::move(tn);
        th = thn;
        if (iters % 4 == 0 || step <= cfg.tol) {
            // stationarity: fixed point of the projected-gradient map at t
            ob.grad(t, g);
            for (size_t k = 0; k < F; ++k) z[k] = t[k] - g[k] / L;
            z = pr.project(std::move(z));
            double st = 0.0;
            for (size_t k = 0; k < F; ++k) st = std::max(st, std::fabs(z[k] - t[k]));
            if (st <= cfg.tol) { converged = true; break; }
        }
    }
    return tb;
}

}  // namespace

ArgminResult argmin_hamiltonian(const ModelParams& mp, const CostSpec& cost,
                                const FeasibilityContext& ctx, const Vec& p,
                                const ArgminConfig& cfg, const ControlMatrix* warm) {
    if (!(cfg.epsilon > 0.0))
        throw ConfigError("argmin_hamiltonian: epsilon must be > 0 (use hamiltonian_H for eps=0)");
    Projector pr(ctx, /*pin_zero_queue=*/true, cfg.dykstra_tol, cfg.dykstra_max_cycles);
    Objective ob(mp, cost, ctx, p, pr.fs, cfg.epsilon);
    const size_t F = pr.fs.e.size();
    ArgminResult res;
    res.u = ControlMatrix(mp.d);
    if (F == 0) {
        res.value = ob.eval({});
        return res;
    }

    if (cost.linear() && !cfg.force_iterative) {
        // r is affine on M(x), so the whole objective is eps||t - t*||^2 + const:
        // one exact projection.
        std::vector<double> tgt(F);
        for (size_t k = 0; k < F; ++k) {
            auto [i, j] = pr.fs.e[k];
            (void)j;
            double c = ob.lin[k] - cost.h[i] * ob.w[k];
            tgt[k] = -c / (2.0 * cfg.epsilon);
        }
        std::vector<double> t = pr.project(std::move(tgt));
        scatter(pr.fs, t, res.u);
        res.value = ob.eval(t);
        res.iters = 1;
        return res;
    }

    bool have = false;
    std::vector<double> best;
    double bestv = 0.0;
    int total_iters = 0;
    bool all_ok = true;
    const int R = std::max(1, cfg.restarts);
    for (int r = 0; r < R; ++r) {
        std::vector<double> t0(F, 0.0);
        if (r == 1) {
            if (warm)
                t0 = gather(pr.fs, *warm);
            else
                std::fill(t0.begin(), t0.end(), 0.5);
        } else if (r >= 2) {
            CounterRng rng(0x9e3779b9u * static_cast<uint64_t>(r), 17);
            for (size_t k = 0; k < F; ++k) t0[k] = rng.uniform01(k);
        }
        bool ok = false;
        int it = 0;
        std::vector<double> t = mfista(ob, pr, std::move(t0), cfg, ok, it);
        total_iters += it;
        all_ok = all_ok && ok;
        double v = ob.eval(t);
        if (!have || v < bestv - 1e-15) {
            have = true;
            bestv = v;
            best = std::move(t);
        }
    }
    if (!all_ok)
        throw SolverError("argmin_hamiltonian: projected gradient did not reach tolerance " +
                          std::to_string(cfg.tol) + " within " + std::to_string(cfg.max_iters) +
                          " iterations");
    scatter(pr.fs, best, res.u);
    res.value = bestv;
    res.iters = total_iters;
    return res;
}

double hamiltonian_H_eps(const ModelParams& mp, const CostSpec& cost,
                         const FeasibilityContext& ctx, const Vec& p,
                         const ArgminConfig& cfg, ControlMatrix* minimizer) {
    ArgminResult r = argmin_hamiltonian(mp, cost, ctx, p, cfg);
    if (minimizer) *minimizer = r.u;
    return r.value;
}

std::vector<ControlMatrix> polytope_vertices(const FeasibilityContext& ctx) {
    const ModelParams& p = *ctx.params;
    if (p.d > 3)
        throw CapacityError("polytope_vertices: basis enumeration only supported for d <= 3");
    FreeSet fs = make_free(ctx, /*pin_zero_queue=*/false);
    const int F = static_cast<int>(fs.e.size());
    std::vector<ControlMatrix> out;
    if (F == 0) {
        out.emplace_back(p.d);
        return out;
    }
    // constraint rows: a.t <= b
    std::vector<std::vector<double>> A;
    std::vector<double> bb;
    for (int k = 0; k < F; ++k) {
        std::vector<double> r(F, 0.0);
        r[k] = 1.0;
        A.push_back(r);
        bb.push_back(1.0);
        r[k] = -1.0;
        A.push_back(r);
        bb.push_back(0.0);
    }
    for (int j = 0; j < p.d; ++j) {
        if (fs.by_col[j].empty()) continue;
        std::vector<double> r(F, 0.0);
        for (int k : fs.by_col[j]) r[k] = 1.0;
        A.push_back(r);
        bb.push_back(1.0);
    }
    for (int i = 0; i < p.d; ++i) {
        if (fs.by_row[i].empty()) continue;
        bool nz = false;
        std::vector<double> r(F, 0.0);
        for (int k : fs.by_row[i]) {
            r[k] = ctx.xminus[fs.e[k].second];
            nz = nz || r[k] != 0.0;
        }
        if (!nz) continue;
        A.push_back(r);
        bb.push_back(ctx.xplus[i]);
    }
    const int C = static_cast<int>(A.size());
    std::vector<int> pick(F);
    std::vector<std::vector<double>> verts;
    std::vector<int> comb(F);
    for (int k = 0; k < F; ++k) comb[k] = k;
    auto try_basis = [&]() {
        // solve A[comb] t = bb[comb] by Gaussian elimination w/ partial pivoting
        std::vector<std::vector<double>> M(F, std::vector<double>(F + 1));
        for (int r = 0; r < F; ++r) {
            for (int c = 0; c < F; ++c) M[r][c] = A[comb[r]][c];
            M[r][F] = bb[comb[r]];
        }
        for (int c = 0; c < F; ++c) {
            int piv = c;
            for (int r = c + 1; r < F; ++r)
                if (std::fabs(M[r][c]) > std::fabs(M[piv][c])) piv = r;
            if (std::fabs(M[piv][c]) < 1e-10) return;
            std::swap(M[c], M[piv]);
            for (int r = 0; r < F; ++r) {
                if (r == c) continue;
                double f = M[r][c] / M[c][c];
                for (int cc = c; cc <= F; ++cc) M[r][cc] -= f * M[c][cc];
            }
        }
        std::vector<double> t(F);
        for (int c = 0; c < F; ++c) t[c] = M[c][F] / M[c][c];
        for (int r = 0; r < C; ++r) {
            double s = 0.0;
            for (int c = 0; c < F; ++c) s += A[r][c] * t[c];
            if (s > bb[r] + 1e-9) return;
        }
        for (const auto& v : verts) {
            double dmax = 0.0;
            for (int c = 0; c < F; ++c) dmax = std::max(dmax, std::fabs(v[c] - t[c]));
            if (dmax <= 1e-9) return;
        }
        verts.push_back(std::move(t));
    };
    // enumerate F-combinations of the C constraints in lexicographic order
    while (true) {
        try_basis();
        int k = F - 1;
        while (k >= 0 && comb[k] == C - F + k) --k;
        if (k < 0) break;
        ++comb[k];
        for (int kk = k + 1; kk < F; ++kk) comb[kk] = comb[kk - 1] + 1;
    }
    out.reserve(verts.size());
    for (const auto& t : verts) {
        ControlMatrix u(p.d);
        scatter(fs, t, u);
        out.push_back(u);
    }
    return out;
}

double hamiltonian_H(const ModelParams& mp, const CostSpec& cost,
                     const FeasibilityContext& ctx, const Vec& p,
                     const ArgminConfig& cfg, ControlMatrix* minimizer) {
    if (cost.linear() && mp.d <= 3) {
        // exact: linear objective over M(x) attains its min at a vertex
        std::vector<ControlMatrix> vs = polytope_vertices(ctx);
        double bestv = 0.0;
        const ControlMatrix* bestu = nullptr;
        for (const auto& u : vs) {
            double v = hamiltonian_objective(mp, cost, ctx, p, u, 0.0);
            if (!bestu || v < bestv - 1e-12) {
                bestu = &u;
                bestv = v;
            } else if (v <= bestv + 1e-12 &&
                       std::lexicographical_compare(u.a.begin(), u.a.end(), bestu->a.begin(),
                                                    bestu->a.end())) {
                bestu = &u;  // deterministic tie-break: lexicographically smallest
            }
        }
        if (minimizer) *minimizer = *bestu;
        return bestv;
    }
    // eps-ladder with early stop once successive values agree
    const double ladder[3] = {1e-2, 1e-3, 1e-4};
    double prev = 0.0;
    bool have = false;
    ControlMatrix u;
    double val = 0.0;
    for (double eps : ladder) {
        ArgminConfig c = cfg;
        c.epsilon = eps;
        ArgminResult r = argmin_hamiltonian(mp, cost, ctx, p, c);
        val = r.value;
        u = r.u;
        if (have && std::fabs(val - prev) <= 1e-6 + 0.1 * eps * mp.d) break;
        prev = val;
        have = true;
    }
    if (minimizer) *minimizer = u;
    return val;
}

ArgminResult brute_force_argmin(const ModelParams& mp, const CostSpec& cost,
                                const FeasibilityContext& ctx, const Vec& p, double eps,
                                int grid_points) {
    if (grid_points < 2) throw ConfigError("brute_force_argmin: grid_points must be >= 2");
    FreeSet fs = make_free(ctx, /*pin_zero_queue=*/false);
    const int F = static_cast<int>(fs.e.size());
    double cand = 1.0;
    for (int k = 0; k < F; ++k) {
        cand *= grid_points;
        if (cand > 1e8)
            throw CapacityError("brute_force_argmin: candidate count exceeds 1e8 cap");
    }
    ArgminResult res;
    res.u = ControlMatrix(mp.d);
    ControlMatrix u(mp.d);
    std::vector<int> idx(F, 0);
    bool have = false;
    const double step = 1.0 / (grid_points - 1);
    while (true) {
        for (int k = 0; k < F; ++k) u(fs.e[k].first, fs.e[k].second) = idx[k] * step;
        if (contains(ctx, u, 1e-12)) {
            double v = hamiltonian_objective(mp, cost, ctx, p, u, eps);
            if (!have || v < res.value) {  // strict: ties keep earlier (lexicographic)
                have = true;
                res.value = v;
                res.u = u;
            }
        }
        int k = F - 1;
        while (k >= 0 && idx[k] == grid_points - 1) idx[k--] = 0;
        if (k < 0) break;
        ++idx[k];
    }
    if (!have) {
        // zero matrix is always feasible; only reachable if F == 0
        res.value = hamiltonian_objective(mp, cost, ctx, p, res.u, eps);
    }
    return res;
}

std::vector<ControlMatrix> feasible_candidates(const FeasibilityContext& ctx, int random_count,
                                               uint64_t seed) {
    const ModelParams& p = *ctx.params;
    std::vector<ControlMatrix> out;
    out.emplace_back(p.d);  // zero
    FreeSet fs = make_free(ctx, /*pin_zero_queue=*/false);
    if (fs.e.empty()) return out;
    if (p.d <= 3) {
        auto vs = polytope_vertices(ctx);
        out.insert(out.end(), vs.begin(), vs.end());
    }
    // greedy maximal fills (forward and reverse entry order)
    for (int rev = 0; rev < 2; ++rev) {
        ControlMatrix u(p.d);
        Vec colw(p.d, 0.0), roww(p.d, 0.0);
        for (size_t kk = 0; kk < fs.e.size(); ++kk) {
            size_t k = rev ? fs.e.size() - 1 - kk : kk;
            auto [i, j] = fs.e[k];
            double cap = 1.0 - colw[j];
            if (ctx.xminus[j] > 0.0)
                cap = std::min(cap, (ctx.xplus[i] - roww[i]) / ctx.xminus[j]);
            cap = std::min(1.0, std::max(0.0, cap));
            u(i, j) = cap;
            colw[j] += cap;
            roww[i] += cap * ctx.xminus[j];
        }
        out.push_back(u);
    }
    CounterRng rng(seed, 23);
    for (int r = 0; r < random_count; ++r) {
        ControlMatrix u(p.d);
        for (size_t k = 0; k < fs.e.size(); ++k)
            u(fs.e[k].first, fs.e[k].second) =
                rng.uniform01(static_cast<uint64_t>(r) * fs.e.size() + k);
        out.push_back(project_to_feasible(ctx, u));
    }
    return out;
}

}  // namespace hwctl
