#include "hwctl/diffusion_sim.hpp"

#include <cmath>
#include <map>
#include <string>

#include "hwctl/errors.hpp"
#include "hwctl/rng.hpp"

namespace hwctl {

namespace {
void check_sim_config(const SimConfig& cfg) {
    if (!(cfg.T > 0.0) || !(cfg.dt > 0.0)) throw ConfigError("sim: T and dt must be > 0");
    if (cfg.dt > 1e-2) throw ConfigError("sim: dt must be <= 1e-2");
    if (!(cfg.burn_in >= 0.0) || cfg.burn_in >= cfg.T)
        throw ConfigError("sim: burn_in must lie in [0, T)");
    if (cfg.replications < 1) throw ConfigError("sim: replications must be >= 1");
}
}  // namespace

PathSummary simulate_path(const ModelParams& p, const CostSpec& c, const MarkovPolicy& pol,
                          const Vec& x0, const SimConfig& cfg, int replication, double eps) {
    check_sim_config(cfg);
    const int d = p.d;
    if (static_cast<int>(x0.size()) != d) throw ConfigError("sim: x0 dimension mismatch");
    const uint64_t nsteps = static_cast<uint64_t>(std::llround(cfg.T / cfg.dt));
    const uint64_t burn = static_cast<uint64_t>(std::llround(cfg.burn_in / cfg.dt));

    CounterRng path(cfg.seed, static_cast<uint64_t>(replication));
    CounterRng noise = path.substream(0);
    CounterRng auditor = path.substream(1);

    Vec sigma = diffusion_coeff(p);
    const double sq = std::sqrt(cfg.dt);
    Vec x = x0;
    double cost_sum = 0.0, m2_sum = 0.0, mk_sum = 0.0;
    uint64_t counted = 0;
    int audited = 0;

    for (uint64_t s = 0; s < nsteps; ++s) {
        ControlMatrix u = pol.evaluate(x);
        if (cfg.audit_fraction > 0.0 &&
            auditor.uniform01(s) < cfg.audit_fraction) {
            ++audited;
            FeasibilityContext ctx = make_context(p, x);
            if (!contains(ctx, u, 1e-9))
                throw DiagnosticError("sim: policy output infeasible at step " +
                                      std::to_string(s));
        }
        if (s >= burn) {
            cost_sum += perturbed_cost(c, x, u, eps);
            double n2 = 0.0;
            for (int i = 0; i < d; ++i) n2 += x[i] * x[i];
            m2_sum += n2;
            mk_sum += std::pow(n2, 0.5 * cfg.moment_k);
            ++counted;
        }
        Vec b = limiting_drift(p, x, u);
        for (int i = 0; i < d; ++i) {
            x[i] += b[i] * cfg.dt + sigma[i] * sq * noise.normal(s * d + static_cast<uint64_t>(i));
            if (!std::isfinite(x[i]) || std::fabs(x[i]) > 1e7)
                throw DiagnosticError("sim: path blew up at step " + std::to_string(s));
        }
    }
    PathSummary out;
    out.avg_cost = cost_sum / static_cast<double>(counted);
    out.avg_m2 = m2_sum / static_cast<double>(counted);
    out.avg_mk = mk_sum / static_cast<double>(counted);
    out.final_state = x;
    out.steps = nsteps;
    out.audited = audited;
    return out;
}

CostEstimate estimate_ergodic_cost(const ModelParams& p, const CostSpec& c,
                                   const MarkovPolicy& pol, const Vec& x0, const SimConfig& cfg,
                                   double eps) {
    check_sim_config(cfg);
    if (static_cast<int>(x0.size()) != p.d) throw ConfigError("sim: x0 dimension mismatch");
    const int R = cfg.replications;
    CostEstimate est;
    est.reps.resize(R);
    std::vector<std::string> errors(R);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel)
#endif
    for (int r = 0; r < R; ++r) {
        try {
            est.reps[r] = simulate_path(p, c, pol, x0, cfg, r, eps);
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    }
    for (int r = 0; r < R; ++r)
        if (!errors[r].empty()) throw DiagnosticError("replication " + std::to_string(r) + ": " + errors[r]);
    // deterministic reduction in replication order
    double mean = 0.0;
    for (int r = 0; r < R; ++r) mean += est.reps[r].avg_cost;
    mean /= R;
    double var = 0.0;
    for (int r = 0; r < R; ++r) {
        double dr = est.reps[r].avg_cost - mean;
        var += dr * dr;
    }
    var = R > 1 ? var / (R - 1) : 0.0;
    est.mean = mean;
    est.ci_halfwidth = R > 1 ? 1.96 * std::sqrt(var / R) : 0.0;
    return est;
}

namespace {
// chi(s) = s^{k/2} for s >= 1; inside, the quadratic a + b s + c s^2 matching
// value and two derivatives at s = 1 keeps V in C^2.
struct Chi {
    double k, ca, cb, cc;
    explicit Chi(double k_) : k(k_) {
        double d1 = 0.5 * k;                  // chi'(1)
        double d2 = 0.5 * k * (0.5 * k - 1);  // chi''(1)
        cc = 0.5 * d2;
        cb = d1 - d2;
        ca = 1.0 - cb - cc;
    }
    double val(double s) const { return s >= 1.0 ? std::pow(s, 0.5 * k) : ca + cb * s + cc * s * s; }
    double d(double s) const {
        return s >= 1.0 ? 0.5 * k * std::pow(s, 0.5 * k - 1.0) : cb + 2.0 * cc * s;
    }
    double dd(double s) const {
        return s >= 1.0 ? 0.5 * k * (0.5 * k - 1.0) * std::pow(s, 0.5 * k - 2.0) : 2.0 * cc;
    }
};
}  // namespace

double lyapunov_value(const LyapunovSpec& spec, const Vec& x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return Chi(spec.k).val(s);
}

double lyapunov_generator_sup(const ModelParams& p, const LyapunovSpec& spec, const Vec& x,
                              int random_controls, uint64_t seed) {
    Chi chi(spec.k);
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    const double c1 = chi.d(s), c2 = chi.dd(s);
    double trace = 0.0;
    for (int i = 0; i < p.d; ++i) trace += p.lambda[i] * (2.0 * c1 + 4.0 * x[i] * x[i] * c2);
    FeasibilityContext ctx = make_context(p, x);
    double best = -1e300;
    for (const ControlMatrix& u : feasible_candidates(ctx, random_controls, seed)) {
        Vec b = limiting_drift(p, x, u);
        double drift = 0.0;
        for (int i = 0; i < p.d; ++i) drift += b[i] * 2.0 * x[i] * c1;
        best = std::max(best, trace + drift);
    }
    return best;
}

LyapunovFit lyapunov_probe(const ModelParams& p, const LyapunovSpec& spec, uint64_t seed) {
    if (!(spec.k >= 1.0)) throw ConfigError("lyapunov: k must be >= 1");
    if (!(spec.R_fit > 0.0) || !(spec.R_test > spec.R_fit))
        throw ConfigError("lyapunov: need 0 < R_fit < R_test");
    CounterRng rng(seed, 31);
    std::vector<Vec> fit_x, test_x;
    uint64_t ctr = 0;
    for (int shell = 1; shell <= spec.shells; ++shell) {
        double r = spec.R_test * shell / spec.shells;
        for (int q = 0; q < spec.per_shell; ++q) {
            Vec dir(p.d);
            double n2 = 0.0;
            for (int i = 0; i < p.d; ++i) {
                dir[i] = rng.normal(ctr++);
                n2 += dir[i] * dir[i];
            }
            if (n2 == 0.0) continue;
            double scl = r / std::sqrt(n2);
            for (int i = 0; i < p.d; ++i) dir[i] *= scl;
            (r <= spec.R_fit ? fit_x : test_x).push_back(dir);
        }
        // axis-aligned extremes hit the kinks of x^- / x^+
        for (int i = 0; i < p.d; ++i)
            for (double sgn : {1.0, -1.0}) {
                Vec e(p.d, 0.0);
                e[i] = sgn * r;
                (r <= spec.R_fit ? fit_x : test_x).push_back(e);
            }
    }
    LyapunovFit out;
    out.fit_samples = static_cast<int>(fit_x.size());
    out.test_samples = static_cast<int>(test_x.size());

    // least squares through the per-shell upper envelope (samples sit at exact
    // shell radii, so the envelope is the shell-wise max of sup_u L^u V); a
    // per-sample fit would chase the steep directions and overshoot the tail
    // decay. Conservative slope, then the intercept lifted until the bound
    // majorizes every fit sample.
    std::vector<double> hx(fit_x.size()), env(fit_x.size());
    std::map<double, double> shell_env;
    for (size_t q = 0; q < fit_x.size(); ++q) {
        double n2 = 0.0;
        for (double v : fit_x[q]) n2 += v * v;
        hx[q] = std::pow(n2, 0.5 * spec.k);
        env[q] = lyapunov_generator_sup(p, spec, fit_x[q], spec.random_controls, seed + q);
        auto it = shell_env.find(hx[q]);
        if (it == shell_env.end())
            shell_env.emplace(hx[q], env[q]);
        else
            it->second = std::max(it->second, env[q]);
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [s, e] : shell_env) {
        sx += s;
        sy += e;
        sxx += s * s;
        sxy += s * e;
    }
    const double nfit = static_cast<double>(shell_env.size());
    double slope = (nfit * sxy - sx * sy) / std::max(1e-300, nfit * sxx - sx * sx);
    out.c6 = 0.9 * (-slope);
    if (!(out.c6 > 0.0)) {
        out.c6 = 0.0;
        out.violations = out.fit_samples + out.test_samples;  // no negative drift found
        return out;
    }
    double c5 = -1e300;
    for (size_t q = 0; q < fit_x.size(); ++q) c5 = std::max(c5, env[q] + out.c6 * hx[q]);
    out.c5 = c5;
    for (const Vec& x : test_x) {
        double n2 = 0.0;
        for (double v : x) n2 += v * v;
        double bound = c5 - out.c6 * std::pow(n2, 0.5 * spec.k);
        double val = lyapunov_generator_sup(p, spec, x, spec.random_controls, seed + 977);
        if (val > bound + 1e-9) {
            ++out.violations;
            out.worst_gap = std::max(out.worst_gap, val - bound);
        }
    }
    return out;
}

}  // namespace hwctl
